from abc import ABC, abstractmethod
from typing import List, Dict, Any, Optional, Union
import logging
import os


class StorageProviderBase(ABC):
    """Abstract base class for experiment storage: configs are read from it, artifacts written to it."""

    @abstractmethod
    def list_files(self) -> List[Dict[str, Any]]:
        """List all files in the experiment directory."""
        pass

    @abstractmethod
    def download_file(self, file_name: str) -> Optional[bytes]:
        """Read a file, or None if it does not exist."""
        pass

    @abstractmethod
    def file_exists(self, file_name: str) -> bool:
        """Check if a file exists in the experiment directory."""
        pass

    @abstractmethod
    def upload_file(self, file_name: str, content: Union[str, bytes]) -> None:
        """Write a file, replacing any previous content."""
        pass


def _content_type(filename: str) -> str:
    ext = os.path.splitext(filename)[1].lower()
    content_types = {
        '.json': 'application/json',
        '.csv': 'text/csv',
        '.txt': 'text/plain',
        '.md': 'text/markdown',
    }
    return content_types.get(ext, 'application/octet-stream')


def _as_bytes(content: Union[str, bytes]) -> bytes:
    return content.encode("utf-8") if isinstance(content, str) else bytes(content)


class MemoryProvider(StorageProviderBase):
    """In-memory storage. Default provider for tests and for configs built in code."""

    def __init__(self, files: Optional[Dict[str, Union[str, bytes]]] = None):
        """
        Args:
            files: Initial file contents keyed by file name
        """
        self._files: Dict[str, bytes] = {name: _as_bytes(content) for name, content in (files or {}).items()}

    def list_files(self) -> List[Dict[str, Any]]:
        return [
            {
                "name": name,
                "filename": name,
                "size": len(content),
                "created_at": 0,
                "modified_at": 0,
                "content_type": _content_type(name),
            }
            for name, content in sorted(self._files.items())
        ]

    def download_file(self, file_name: str) -> Optional[bytes]:
        return self._files.get(file_name)

    def file_exists(self, file_name: str) -> bool:
        return file_name in self._files

    def upload_file(self, file_name: str, content: Union[str, bytes]) -> None:
        self._files[file_name] = _as_bytes(content)


class FileSystemProvider(StorageProviderBase):
    """Local directory of configs or artifacts."""

    def __init__(self, base_path: str, create: bool = False):
        """
        Args:
            base_path: Directory holding the files
            create: Create the directory when missing (output directories)
        """
        self._base_path = base_path

        if create:
            os.makedirs(self._base_path, exist_ok=True)

        if not os.path.exists(self._base_path):
            raise ValueError(f"Directory '{self._base_path}' does not exist")

        if not os.path.isdir(self._base_path):
            raise ValueError(f"'{self._base_path}' is not a directory")

    @property
    def base_path(self) -> str:
        return self._base_path

    def list_files(self) -> List[Dict[str, Any]]:
        try:
            files = []
            for filename in sorted(os.listdir(self._base_path)):
                file_path = os.path.join(self._base_path, filename)
                if os.path.isfile(file_path):
                    stat = os.stat(file_path)
                    files.append({
                        "name": filename,
                        "filename": filename,
                        "size": stat.st_size,
                        "created_at": stat.st_ctime,
                        "modified_at": stat.st_mtime,
                        "content_type": _content_type(filename),
                    })
            return files
        except OSError as e:
            logging.warning(f"Could not list '{self._base_path}': {e}")
            return []

    def download_file(self, file_name: str) -> Optional[bytes]:
        file_path = os.path.join(self._base_path, file_name)
        if not os.path.isfile(file_path):
            return None
        with open(file_path, 'rb') as f:
            return f.read()

    def file_exists(self, file_name: str) -> bool:
        return os.path.isfile(os.path.join(self._base_path, file_name))

    def upload_file(self, file_name: str, content: Union[str, bytes]) -> None:
        file_path = os.path.join(self._base_path, file_name)
        with open(file_path, 'wb') as f:
            f.write(_as_bytes(content))
        logging.debug(f"Wrote {file_path}")

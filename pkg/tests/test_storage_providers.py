import pytest
import json
import os
import tempfile
import shutil

from dirichletlab.storage_providers import MemoryProvider, FileSystemProvider, StorageProviderBase


class TestMemoryProvider:
    """Test cases for MemoryProvider class."""

    def test_memory_provider_initialization(self):
        """Test MemoryProvider initialization with initial files."""
        # Arrange
        config = json.dumps({"seed": 1})

        # Act
        provider = MemoryProvider({"experiment.json": config})

        # Assert
        assert provider.file_exists("experiment.json")
        assert provider.download_file("experiment.json") == config.encode("utf-8")

    def test_memory_provider_empty(self):
        """Test that a provider without files lists nothing."""
        # Act
        provider = MemoryProvider()

        # Assert
        assert provider.list_files() == []
        assert provider.download_file("experiment.json") is None

    def test_memory_provider_list_files(self):
        """Test list_files metadata and ordering."""
        # Arrange
        provider = MemoryProvider({"report.txt": "text", "experiment.json": "{}"})

        # Act
        files = provider.list_files()

        # Assert
        assert [f["name"] for f in files] == ["experiment.json", "report.txt"]
        for file_info in files:
            assert "filename" in file_info
            assert "size" in file_info
            assert "created_at" in file_info
            assert "modified_at" in file_info
        assert files[0]["content_type"] == "application/json"
        assert files[1]["content_type"] == "text/plain"

    def test_memory_provider_upload_replaces(self):
        """Test that uploads store bytes and replace earlier content."""
        # Arrange
        provider = MemoryProvider({"trajectory.csv": "old"})

        # Act
        provider.upload_file("trajectory.csv", "time,point,value\n")

        # Assert
        assert provider.download_file("trajectory.csv") == b"time,point,value\n"
        assert provider.list_files()[0]["content_type"] == "text/csv"

    def test_memory_provider_is_storage_provider(self):
        """Test that MemoryProvider implements the base interface."""
        # Act & Assert
        assert isinstance(MemoryProvider(), StorageProviderBase)


class TestFileSystemProvider:
    """Test cases for FileSystemProvider class."""

    @pytest.fixture
    def temp_dir(self):
        """Create a temporary directory for testing."""
        temp_dir = tempfile.mkdtemp()
        yield temp_dir
        shutil.rmtree(temp_dir)

    def test_file_system_provider_initialization(self, temp_dir):
        """Test FileSystemProvider initialization with a valid directory."""
        # Act
        provider = FileSystemProvider(temp_dir)

        # Assert
        assert provider.base_path == temp_dir

    def test_file_system_provider_nonexistent_directory(self):
        """Test FileSystemProvider initialization with a nonexistent directory."""
        # Act & Assert
        with pytest.raises(ValueError, match="does not exist"):
            FileSystemProvider("/nonexistent/directory")

    def test_file_system_provider_not_a_directory(self, temp_dir):
        """Test FileSystemProvider initialization with a file path."""
        # Arrange
        file_path = os.path.join(temp_dir, "experiment.json")
        with open(file_path, "w") as f:
            f.write("{}")

        # Act & Assert
        with pytest.raises(ValueError, match="is not a directory"):
            FileSystemProvider(file_path)

    def test_file_system_provider_creates_output_directory(self, temp_dir):
        """Test that create=True makes missing output directories."""
        # Arrange
        out_dir = os.path.join(temp_dir, "runs", "first")

        # Act
        provider = FileSystemProvider(out_dir, create=True)

        # Assert
        assert os.path.isdir(out_dir)
        assert provider.list_files() == []

    def test_file_system_provider_round_trip(self, temp_dir):
        """Test upload, existence, listing and download."""
        # Arrange
        provider = FileSystemProvider(temp_dir)

        # Act
        provider.upload_file("report.json", '{"seed": 0}\n')

        # Assert
        assert provider.file_exists("report.json")
        assert provider.download_file("report.json") == b'{"seed": 0}\n'
        files = provider.list_files()
        assert len(files) == 1
        assert files[0]["name"] == "report.json"
        assert files[0]["size"] == len(b'{"seed": 0}\n')

    def test_file_system_provider_missing_file(self, temp_dir):
        """Test download of a file that does not exist."""
        # Arrange
        provider = FileSystemProvider(temp_dir)

        # Act & Assert
        assert provider.download_file("missing.json") is None
        assert not provider.file_exists("missing.json")

    def test_file_system_provider_skips_directories(self, temp_dir):
        """Test that subdirectories are not listed as files."""
        # Arrange
        os.makedirs(os.path.join(temp_dir, "nested"))
        provider = FileSystemProvider(temp_dir)

        # Act & Assert
        assert provider.list_files() == []

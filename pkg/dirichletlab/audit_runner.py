import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

from .report import Kind, PropertyRecord, error_record


@dataclass
class AuditSection:
    """One independent part of the audit producing property records."""
    name: str
    anchor: str
    kind: Kind
    run: Callable[[], List[PropertyRecord]]


@dataclass
class SectionOutcome:
    """Result of running a section; status is 'success' or 'error'."""
    name: str
    records: List[PropertyRecord] = field(default_factory=list)
    status: str = "success"
    error: Optional[str] = None


class AuditRunner:
    """Runs audit sections one after another; a failing section never stops the audit."""

    def run_sections(self, sections: List[AuditSection]) -> List[SectionOutcome]:
        """
        Run a list of sections and return their outcomes in order.

        Args:
            sections: AuditSection objects to execute

        Returns:
            List of SectionOutcome objects with records or error details
        """
        if not sections:
            return []
        return [self._dispatch_section(section) for section in sections]

    def _dispatch_section(self, section: AuditSection) -> SectionOutcome:
        try:
            records = section.run()
            logging.debug(f"Audit section '{section.name}' produced {len(records)} records")
            return SectionOutcome(name=section.name, records=records)
        except Exception as e:
            logging.error(f"Audit section '{section.name}' failed: {type(e).__name__}: {e}")
            return SectionOutcome(
                name=section.name,
                records=[error_record(section.name, section.anchor, section.kind, e)],
                status="error",
                error=str(e),
            )

"""
Run ledger service: persist verification reports and read them back.
"""
import logging
from typing import List, Optional
from uuid import UUID

from sqlalchemy.orm import Session

from src.models.models import CheckRecord, VerificationRun
from src.schemas.schemas import CheckResult, Report, ReportMeta

logger = logging.getLogger(__name__)


class RunLedgerService:
    """Service for the verification run ledger."""

    @staticmethod
    def record_report(db: Session, report: Report) -> VerificationRun:
        """
        Store a report with one check record per check.

        Args:
            db: Database session
            report: Suite report

        Returns:
            Created VerificationRun
        """
        tally = report.counts()
        run = VerificationRun(
            example=report.meta.example,
            n=report.meta.n,
            mode=report.meta.mode,
            tol_profile=report.meta.tol_profile,
            seed=report.meta.seed,
            passed=report.passed,
            pass_count=tally["pass"],
            fail_count=tally["fail"],
            expected_fail_count=tally["expected-fail"],
            error_count=tally["error"],
            meta=report.meta.model_dump(mode="json"),
        )
        for position, check in enumerate(report.checks):
            run.checks.append(CheckRecord(position=position, **check.model_dump()))
        db.add(run)
        db.commit()
        db.refresh(run)
        logger.info(f"Recorded run {run.id} for {run.example} (passed={run.passed})")
        return run

    @staticmethod
    def list_runs(
        db: Session,
        example: Optional[str] = None,
        passed: Optional[bool] = None,
        skip: int = 0,
        limit: int = 100,
    ) -> List[VerificationRun]:
        query = db.query(VerificationRun)
        if example is not None:
            query = query.filter(VerificationRun.example == example)
        if passed is not None:
            query = query.filter(VerificationRun.passed == passed)
        return query.order_by(VerificationRun.created_at.desc()).offset(skip).limit(limit).all()

    @staticmethod
    def get_run(db: Session, run_id: UUID) -> Optional[VerificationRun]:
        return db.query(VerificationRun).filter(VerificationRun.id == run_id).first()

    @staticmethod
    def report_from_run(run: VerificationRun) -> Report:
        """Rebuild the report a run was recorded from."""
        return Report(
            meta=ReportMeta(**run.meta),
            checks=[CheckResult.model_validate(record) for record in run.checks],
        )

    @staticmethod
    def delete_run(db: Session, run_id: UUID) -> bool:
        run = RunLedgerService.get_run(db, run_id)
        if run is None:
            return False
        db.delete(run)
        db.commit()
        logger.info(f"Deleted run {run_id}")
        return True

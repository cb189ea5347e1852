"""
Verification routes: run the suite on an example and browse recorded runs.
"""
from fastapi import APIRouter, Depends, HTTPException, Query
from sqlalchemy.orm import Session
from typing import List, Optional
from uuid import UUID

from src.db.session import get_db
from src.errors import UnknownExample
from src.schemas.schemas import (
    Report,
    VerificationRequest,
    VerificationResponse,
    VerificationRunDetail,
    VerificationRunResponse,
)
from src.services.example_registry import ExampleRegistry
from src.services.run_ledger import RunLedgerService
from src.services.verification_suite import VerificationSuite

router = APIRouter(prefix="/verifications", tags=["Verifications"])


@router.post("", response_model=VerificationResponse, status_code=201)
def run_verification(
    request: VerificationRequest,
    db: Session = Depends(get_db),
):
    """
    Run the verification suite and record the report.

    Args:
        request: Example, dimension, grid, tolerance profile, seed and filter
        db: Database session

    Returns:
        Run id, overall verdict and the full report
    """
    try:
        spec = ExampleRegistry.example(request.example, request.n, request.params)
    except UnknownExample as error:
        raise HTTPException(status_code=404, detail=str(error))
    except ValueError as error:
        raise HTTPException(status_code=400, detail=str(error))

    report = VerificationSuite.run_suite(
        spec,
        checks_filter=request.checks,
        grid=request.grid,
        tol_profile=request.tol_profile,
        seed=request.seed,
        s_max=request.s_max,
        rays=request.rays or 8,
    )
    run = RunLedgerService.record_report(db, report)
    return VerificationResponse(run_id=run.id, passed=report.passed, report=report)


@router.get("", response_model=List[VerificationRunResponse])
def list_runs(
    example: Optional[str] = Query(None, description="Filter by example name"),
    passed: Optional[bool] = Query(None, description="Filter by overall verdict"),
    skip: int = Query(0, ge=0),
    limit: int = Query(100, ge=1, le=1000),
    db: Session = Depends(get_db),
):
    """List recorded runs, newest first."""
    return RunLedgerService.list_runs(db, example=example, passed=passed, skip=skip, limit=limit)


@router.get("/{run_id}", response_model=VerificationRunDetail)
def get_run(run_id: UUID, db: Session = Depends(get_db)):
    """Get a recorded run with its check records."""
    run = RunLedgerService.get_run(db, run_id)
    if not run:
        raise HTTPException(status_code=404, detail="Verification run not found")
    return run


@router.get("/{run_id}/report", response_model=Report)
def get_report(run_id: UUID, db: Session = Depends(get_db)):
    """Rebuild the report of a recorded run."""
    run = RunLedgerService.get_run(db, run_id)
    if not run:
        raise HTTPException(status_code=404, detail="Verification run not found")
    return RunLedgerService.report_from_run(run)


@router.delete("/{run_id}", status_code=204)
def delete_run(run_id: UUID, db: Session = Depends(get_db)):
    """Delete a recorded run."""
    if not RunLedgerService.delete_run(db, run_id):
        raise HTTPException(status_code=404, detail="Verification run not found")

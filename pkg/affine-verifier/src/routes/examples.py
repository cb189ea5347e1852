"""
Example registry routes.
"""
from fastapi import APIRouter, HTTPException, Query
from typing import List, Optional

from src.errors import BadDimension, UnknownExample
from src.schemas.schemas import ExampleManifest, ExampleSummary
from src.services.example_registry import DIMENSIONS, ExampleRegistry

router = APIRouter(prefix="/examples", tags=["Examples"])


@router.get("", response_model=List[ExampleSummary])
def list_examples():
    """List registered examples with their supported dimensions."""
    return [
        ExampleSummary(name=name, default_n=DIMENSIONS[name][0], min_n=DIMENSIONS[name][1], max_n=DIMENSIONS[name][2])
        for name in ExampleRegistry.names()
    ]


@router.get("/{name}", response_model=ExampleManifest)
def get_example(
    name: str,
    n: Optional[int] = Query(None, ge=1, description="Dimension of the immersed manifold"),
):
    """
    Get the expected-properties manifest of an example.

    Args:
        name: Registered example name
        n: Optional dimension

    Returns:
        Example manifest
    """
    try:
        spec = ExampleRegistry.example(name, n)
    except UnknownExample as error:
        raise HTTPException(status_code=404, detail=str(error))
    except BadDimension as error:
        raise HTTPException(status_code=400, detail=str(error))
    return ExampleManifest(**spec.manifest_dict())

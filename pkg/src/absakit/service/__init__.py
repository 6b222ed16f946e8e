"""HTTP service layer: FastAPI app factory and pydantic schemas."""

from absakit.service.app import ServiceSettings, create_app

__all__ = ["ServiceSettings", "create_app"]

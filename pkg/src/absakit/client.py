"""Thin HTTP client for the toolkit service.

By default requests run against an in-process app instance (no daemon, one
command per process); point ``server``/``ABSAKIT_SERVER`` at a running
service to operate remotely instead.  Either way the CLI speaks exactly the
service's wire format.
"""

from __future__ import annotations

import asyncio
import os
from typing import Any

import httpx

from absakit.service import ServiceSettings, create_app


class ClientError(Exception):
    def __init__(self, status: int, detail: Any):
        super().__init__(f"HTTP {status}: {detail}")
        self.status = status
        self.detail = detail


class ServiceClient:
    def __init__(self, server: str | None = None, settings: ServiceSettings | None = None):
        self.server = server or os.environ.get("ABSAKIT_SERVER") or None
        self._settings = settings
        self._app = None

    def _get_app(self):
        if self._app is None:
            self._app = create_app(self._settings or ServiceSettings.from_env())
        return self._app

    async def _request_inprocess(self, method: str, path: str, **kwargs) -> httpx.Response:
        transport = httpx.ASGITransport(app=self._get_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://absakit") as client:
            return await client.request(method, path, **kwargs)

    def request(self, method: str, path: str, **kwargs) -> httpx.Response:
        if self.server:
            with httpx.Client(base_url=self.server, timeout=600.0) as client:
                return client.request(method, path, **kwargs)
        return asyncio.run(self._request_inprocess(method, path, **kwargs))

    def call(self, method: str, path: str, **kwargs) -> Any:
        """Request and parse; raises ClientError for any 4xx/5xx answer."""
        response = self.request(method, path, **kwargs)
        content_type = response.headers.get("content-type", "")
        body = response.json() if content_type.startswith("application/json") else response.text
        if response.status_code >= 400:
            detail = body.get("detail", body) if isinstance(body, dict) else body
            raise ClientError(response.status_code, detail)
        return body

"""
Transport configuration for the vasicek-gpr-mcp server.

Supports STDIO (default), HTTP Streamable and legacy SSE.

Environment Variables:
    MCP_TRANSPORT: Transport mode (stdio, http, sse). Default: stdio
    MCP_HOST: Bind address for HTTP/SSE. Default: 127.0.0.1
    MCP_PORT: Port for HTTP/SSE. Default: 10880
    MCP_PATH: HTTP endpoint path. Default: /mcp

Priority: CLI flag > environment variable > default.
"""

import argparse
import asyncio
import logging
import os
from typing import Literal, Optional

from pydantic import BaseModel, Field

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

TransportType = Literal["stdio", "http", "sse"]

ENV_TRANSPORT = "MCP_TRANSPORT"
ENV_HOST = "MCP_HOST"
ENV_PORT = "MCP_PORT"
ENV_PATH = "MCP_PATH"

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 10880
DEFAULT_PATH = "/mcp"


class TransportConfig(BaseModel):
    transport: TransportType = "stdio"
    host: str = DEFAULT_HOST
    port: int = Field(default=DEFAULT_PORT, ge=1, le=65535)
    path: str = DEFAULT_PATH


def get_transport_config() -> TransportConfig:
    """Transport settings from the environment."""
    raw_port = os.getenv(ENV_PORT, str(DEFAULT_PORT))
    try:
        port = int(raw_port)
    except ValueError:
        raise ConfigurationError(f"{ENV_PORT} must be an integer, got {raw_port!r}") from None
    return TransportConfig(
        transport=_env_transport(),
        host=os.getenv(ENV_HOST, DEFAULT_HOST),
        port=port,
        path=os.getenv(ENV_PATH, DEFAULT_PATH),
    )


def _env_transport() -> TransportType:
    env_transport = os.getenv(ENV_TRANSPORT, "stdio").lower()
    if env_transport not in ("stdio", "http", "sse"):
        logger.warning(f"Invalid {ENV_TRANSPORT}='{env_transport}', defaulting to stdio")
        return "stdio"
    return env_transport  # type: ignore[return-value]


def add_transport_arguments(parser: argparse.ArgumentParser, include_debug: bool = True) -> argparse.ArgumentParser:
    """Add --stdio/--http/--sse, --host, --port and --path to a parser."""
    transport_group = parser.add_mutually_exclusive_group()
    transport_group.add_argument("--stdio", action="store_true", help="Run in STDIO (JSON-RPC) mode (default)")
    transport_group.add_argument("--http", action="store_true", help="Run in HTTP Streamable mode")
    transport_group.add_argument("--sse", action="store_true", help="Run in SSE mode (deprecated, use --http)")

    parser.add_argument("--host", default=None, help=f"Host to bind to (default: ${ENV_HOST} or {DEFAULT_HOST})")
    parser.add_argument(
        "--port", type=int, default=None, help=f"Port to listen on (default: ${ENV_PORT} or {DEFAULT_PORT})"
    )
    parser.add_argument("--path", default=None, help=f"HTTP endpoint path (default: ${ENV_PATH} or {DEFAULT_PATH})")
    if include_debug:
        parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    return parser


def create_argument_parser(server_name: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description=f"{server_name} - Vasicek GPR calibration tools over MCP",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
Examples:
  {server_name} --stdio
  {server_name} --http --port {DEFAULT_PORT}
  {ENV_TRANSPORT}=http {ENV_PORT}={DEFAULT_PORT} {server_name}
""",
    )
    return add_transport_arguments(parser)


def resolve_transport(args: argparse.Namespace) -> TransportType:
    """CLI flag, else MCP_TRANSPORT, else stdio."""
    if args.http:
        return "http"
    if args.sse:
        logger.warning("SSE transport is deprecated. Consider using --http instead.")
        return "sse"
    if args.stdio:
        return "stdio"
    env_transport = _env_transport()
    if env_transport == "sse":
        logger.warning("SSE transport is deprecated. Consider using MCP_TRANSPORT=http instead.")
    return env_transport


def resolve_config(args: argparse.Namespace) -> TransportConfig:
    env_config = get_transport_config()
    return TransportConfig(
        transport=resolve_transport(args),
        host=args.host if args.host is not None else env_config.host,
        port=args.port if args.port is not None else env_config.port,
        path=args.path if args.path is not None else env_config.path,
    )


def run_server(mcp_app, args: Optional[argparse.Namespace] = None, server_name: str = "vasicek-gpr-mcp") -> None:
    asyncio.run(run_server_async(mcp_app, args, server_name))


async def run_server_async(
    mcp_app, args: Optional[argparse.Namespace] = None, server_name: str = "vasicek-gpr-mcp"
) -> None:
    """Run the FastMCP app on the resolved transport."""
    if args is None:
        args = create_argument_parser(server_name).parse_args()

    if getattr(args, "debug", False):
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug(f"Debug logging enabled for {server_name}")

    config = resolve_config(args)
    logger.info(f"Starting {server_name} v{getattr(mcp_app, 'version', '?.?.?')}")
    logger.info(f"Transport: {config.transport.upper()}")

    try:
        if config.transport == "stdio":
            await mcp_app.run_stdio_async()
        elif config.transport == "http":
            logger.info(f"Running in HTTP Streamable mode: http://{config.host}:{config.port}{config.path}")
            await mcp_app.run_http_async(host=config.host, port=config.port, path=config.path)
        else:
            logger.warning("SSE mode is deprecated. Migrate to HTTP Streamable (--http).")
            await mcp_app.run_async(transport="sse", host=config.host, port=config.port)
    except asyncio.CancelledError:
        logger.info(f"{server_name} task cancelled")
    except Exception as e:
        logger.error(f"{server_name} failed: {e}", exc_info=True)
        raise


__all__ = [
    "TransportType",
    "TransportConfig",
    "ENV_TRANSPORT",
    "ENV_HOST",
    "ENV_PORT",
    "ENV_PATH",
    "get_transport_config",
    "add_transport_arguments",
    "create_argument_parser",
    "resolve_transport",
    "resolve_config",
    "run_server",
    "run_server_async",
]

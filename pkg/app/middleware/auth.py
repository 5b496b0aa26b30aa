"""
Authentication middleware for API key validation.
Validates the x-api-key header on protected endpoints when an API key is configured.
"""

from typing import Optional

from fastapi import Header, HTTPException, status
from app.config import config


async def verify_api_key(x_api_key: Optional[str] = Header(default=None, description="API key for authentication")):
    """
    Dependency function to verify API key from request header.

    An empty API_KEY setting leaves the analysis API open for local use.

    Args:
        x_api_key: The API key from the x-api-key header

    Returns:
        The API key if valid (None when no key is configured)

    Raises:
        HTTPException: If API key is missing or invalid
    """
    if not config.API_KEY:
        return x_api_key

    if not x_api_key:
        raise HTTPException(
            status_code=status.HTTP_401_UNAUTHORIZED,
            detail="API key is required"
        )

    if x_api_key != config.API_KEY:
        raise HTTPException(
            status_code=status.HTTP_403_FORBIDDEN,
            detail="Invalid API key"
        )

    return x_api_key

"""Routes package - API endpoint definitions"""

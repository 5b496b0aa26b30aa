"""Middleware package - Authentication and security middleware"""

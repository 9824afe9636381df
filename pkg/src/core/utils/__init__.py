"""Utility modules for the lipidmc package."""

"""Zhuk-style CSP solving over finite WNU algebras."""

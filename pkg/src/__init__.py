"""Spectral presheaf toolkit - exact spectral presheaves, partial algebras and their isomorphisms."""

"""R-matrix-valued Lax pairs for elliptic Calogero-Moser models."""

"""Diagonal morphisms between interval matrix algebras with traces."""

"""Typed open tensor-network diagrams for qudit circuits."""

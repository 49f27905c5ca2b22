# Deterministic transmission scheduling package

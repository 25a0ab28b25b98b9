//! Deterministic CSV/JSON rendering.

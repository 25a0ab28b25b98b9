//! Desk-scale verification experiments.

//! Command-line frontend.

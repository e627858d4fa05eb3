//! Transformer encoder with dual-ordering pair head (under construction).

//! Training/evaluation pipeline (under construction).

//! Training and evaluation (placeholder).

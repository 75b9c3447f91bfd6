//! Network assembly (placeholder).

pub mod fit;
pub mod nulldist;
pub mod partition;
pub mod residuals;
pub mod simulate;
pub mod study;
pub mod test_composite;
pub mod test_simple;

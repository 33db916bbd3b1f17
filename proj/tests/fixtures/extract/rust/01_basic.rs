/// Adds two numbers.
pub fn add(a: i32, b: i32) -> i32 {
    a + b
}

// Plain comments are not rust docs.
fn plain() {}

/// A point.
pub struct Point {
    x: f64,
    y: f64,
}

impl Point {
    /// Creates a point.
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /** Distance from the origin. */
    pub(crate) fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }
}

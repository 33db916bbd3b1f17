use std::fmt;

trait Shape {
    /// Area of the shape.
    fn area(&self) -> f64;

    /// Describes the shape.
    fn describe(&self) -> String {
        format!("area {}", self.area())
    }
}

impl<T: fmt::Display> fmt::Display for Wrapper<T> {
    /// Formats the wrapper.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = r#"fn fake() { }"#;
        write!(f, "[{}] {}", self.0, s)
    }
}

mod tests {
    /// Checks addition.
    #[test]
    fn adds() {
        let c = '{';
        assert_eq!(1 + 1, 2);
    }
}

package demo.records;

/** A 2D point. */
public record Point(int x, int y) {
    /**
     * Euclidean norm of the point.
     */
    public double norm() {
        return Math.sqrt(x * x + y * y);
    }
}

class Util {
    // Clamp a value.
    // Returns lo or hi when out of range.
    static int clamp(int v, int lo, int hi) {
        return Math.max(lo, Math.min(hi, v));
    }

    @SuppressWarnings("unchecked")
    static <T> T cast(Object o) {
        return (T) o;
    }
}

package demo.shapes;

interface Shape {
    /** Computes the area. */
    double area();

    /** Describes the shape. */
    default String describe() {
        return "shape with area " + area();
    }
}

public class Shapes {
    static class Circle implements Shape {
        private final double r;

        Circle(double r) { this.r = r; }

        /* Area of the circle. */
        public double area() { return Math.PI * r * r; }
    }

    enum Color {
        RED, GREEN;

        /** Lower-case name. */
        String lower() { return name().toLowerCase(); }
    }
}

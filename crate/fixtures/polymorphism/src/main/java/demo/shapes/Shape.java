package demo.shapes;

public interface Shape {
    double area(double scale);
}

class Circle implements Shape {
    public double area(double scale) {
        return 3.14159 * scale * scale;
    }
}

class Square implements Shape {
    public double area(double scale) {
        return scale * scale;
    }
}

class Triangle implements Shape {
    public double area(double scale) {
        return scale * scale / 2;
    }
}

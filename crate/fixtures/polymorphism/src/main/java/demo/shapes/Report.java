package demo.shapes;

import java.lang.reflect.Method;

public class Report {
    public double total(double k) {
        Shape a = new Circle();
        Shape b = new Square();
        double x = a.area(k);
        double y = b.area(k);
        return x + y;
    }

    public double any(Shape s, double k) {
        return s.area(k);
    }

    public Object export(String value) throws Exception {
        Class<?> c = Class.forName("demo.shapes.Formatter");
        Method m = c.getMethod("plain", String.class);
        Object target = c.getDeclaredConstructor().newInstance();
        return m.invoke(target, value);
    }

    public void run(String cmd) throws Exception {
        Runtime.getRuntime().exec(cmd);
    }
}

package demo.shapes;

public class Formatter {
    public String plain(String v) {
        return v.trim();
    }

    public String fancy(String v) {
        return "*" + v + "*";
    }
}

package demo.audit;

class Formatter {
    static String pick(String primary, String fallback) {
        return primary;
    }

    static int weight(int a, int b, int c) {
        int t = a * 2;
        t = c;
        return t;
    }

    static String tag(String label, int level) {
        String s = label.trim();
        return s;
    }

    // Only the last argument survives the recursion.
    static int settle(int seed, int depth, int base) {
        if (depth <= 0) {
            return base;
        }
        return drift(depth - 1, seed, base);
    }

    static int drift(int steps, int noise, int base) {
        return settle(noise + 1, steps, base);
    }
}

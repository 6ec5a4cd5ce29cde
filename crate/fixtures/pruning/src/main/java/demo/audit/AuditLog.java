package demo.audit;

import java.io.PrintStream;

public class AuditLog {
    private final PrintStream out;

    public AuditLog(PrintStream out) {
        this.out = out;
    }

    public String render(String user, String comment, int n, int m) {
        String header = Formatter.pick(user, comment);
        int w = Formatter.weight(n, m, 3);
        String line = Formatter.tag(header, w);
        int k = Formatter.settle(n, m, w);
        String text = line + ":" + k;
        out.println(text);
        return text;
    }

    public String quote(String who) {
        String shown = Formatter.pick("anonymous", who);
        return shown;
    }
}

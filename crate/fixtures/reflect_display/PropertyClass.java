package org.example.macro; import java.lang.reflect.Method;
public class PropertyClass {
    private StringBuilder result = new StringBuilder();
    public String display(String type, String text) throws Exception {
        String prefix = "display";
        String kind = type.trim();
        String head = kind.substring(0, 1).toUpperCase();
        String tail = kind.substring(1);
        String methodName = prefix + head + tail;
        Class clazz = getClass();
        Method method = clazz.getMethod(methodName, String.class);
        // The selected renderer appends its markup
        // to the shared buffer.
        result = new StringBuilder();
        method.invoke(this, text);
        String html = result.toString();
        // Neutralize macro markers before the
        // buffer is handed back to the wiki renderer.
        if (html.contains("{{")) {
            html = html.replace("{{", "&#123;&#123;");
        }
        if (html.contains("}}")) {
            html = html.replace("}}", "&#125;&#125;");
        }
        html = html.trim();
        String wrapped = "<div>" + html + "</div>";
        return wrapped;
    }
    public void displaySearch(String text) {
        String query = text;
        String url = "/search?text=" + query;
        result.append("<form action=\"");
        result.append(url);
        result.append("\">");
        result.append("{{html}}");
        result.append(query);
        result.append("{{/html}}");
        result.append("</form>");
    }
    public void displayLink(String text) {
        result.append("<a href=\"" + text.trim() + "\">link</a>");
    }
}

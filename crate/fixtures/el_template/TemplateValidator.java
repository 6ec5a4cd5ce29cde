package com.example.validation; import java.util.regex.Matcher; import java.util.regex.Pattern; import javax.validation.ConstraintValidatorContext; public class TemplateValidator implements ConstraintValidator {
    // The message below is handed to the validation provider,
    // which interpolates expression-language fragments in it.
    private static final String PARAM_NAME = "value";
    public void initialize(Object annotation) { annotation.hashCode(); }

    public boolean isValid(String value, ConstraintValidatorContext context) {
        String escapedValue = MessageSanitizer.escape(value);
        String message = "Invalid " + PARAM_NAME + ": " + escapedValue;
        context.disableDefaultConstraintViolation();
        context.buildConstraintViolationWithTemplate(message).addConstraintViolation(); return false;
    }
}
/**
 * Escapes interpolation markers before a value reaches a message template.
 */
class MessageSanitizer {
    private static final String ESCAPE_CHARACTER = "\\";
    private static final Pattern ESCAPE_PATTERN =
        Pattern.compile(
            "([${}" +
            ESCAPE_CHARACTER +
            ESCAPE_CHARACTER +
            "])");
    static String escape(String message) {
        if (message == null) {
            return message; }
        Matcher matcher = ESCAPE_PATTERN.matcher(message);
        String escapedValue = matcher.replaceAll(
            Matcher.quoteReplacement(ESCAPE_CHARACTER) + "$1");
        return escapedValue;
    }
} interface ConstraintValidator { boolean isValid(String value, ConstraintValidatorContext context); }

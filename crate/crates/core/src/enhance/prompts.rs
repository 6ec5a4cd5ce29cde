//! Call-edge enhancement prompts and their answer schemas.

use thiserror::Error;

use crate::llm::last_json_object;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnswerError {
    #[error("no JSON object with key `{0}` in the response")]
    Unparseable(&'static str),
    #[error("answer names nothing from the offered list: {0}")]
    NotInList(String),
    #[error("empty answer")]
    Empty,
}

fn list(items: &[String]) -> String {
    items.iter().map(|i| format!("- {i}")).collect::<Vec<_>>().join("\n")
}

pub fn polymorphism_prompt(dataflow: &str, call: &str, candidates: &[String], hierarchy: &str) -> String {
    format!(
        "### Task\n\
As an expert in object-oriented static analysis, analyze the provided dataflow context and identify which candidate methods are feasible targets for this specific polymorphic call statement.\n\
### Inputs\n\
Dataflow Context: The data flow context of the corresponding polymorphic call statement.\n\
Polymorphic Call Statement: The code of the polymorphic call statement.\n\
Candidate Callee Method Signatures: The list of candidate callee method signatures.\n\
Class Inheritance Hierarchy: The class inheritance hierarchy.\n\n\
#### Dataflow Context\n```java\n{dataflow}```\n\
#### Polymorphic Call Statement\n```java\n{call}\n```\n\
#### Candidate Callee Method Signatures\n{}\n\
#### Class Inheritance Hierarchy\n{hierarchy}\n\n\
Answer with a JSON object {{\"feasible\": [<signatures copied exactly from the candidate list>]}}.\n",
        list(candidates)
    )
}

pub fn reflection_class_prompt(dataflow: &str, call: &str, classes: &[String]) -> String {
    format!(
        "### Task\n\
As a software security expert, analyze the provided dataflow context and determine which class is accessed through this reflection API call.\n\
### Inputs\n\
Dataflow Context: The data flow context of corresponding reflection API call statement.\n\
Reflection API Call Statement: The code of reflection API call statement.\n\
Available Classes: The list of all class names in analyzed codebase.\n\n\
#### Dataflow Context\n```java\n{dataflow}```\n\
#### Reflection API Call Statement\n```java\n{call}\n```\n\
#### Available Classes\n{}\n\n\
Answer with a JSON object {{\"class\": \"<name copied exactly from the list>\"}}.\n",
        list(classes)
    )
}

pub fn reflection_method_prompt(dataflow: &str, call: &str, class: &str, methods: &[String]) -> String {
    format!(
        "### Task\n\
Given the target class identified in Step 1, determine which specific method is being invoked through reflection.\n\
### Inputs\n\
Dataflow Context: The data flow context of the corresponding reflection API call statement.\n\
Reflection API Call Statement: The code of reflection API call statement.\n\
Target Class Methods: The list of all methods in identified class.\n\n\
#### Dataflow Context\n```java\n{dataflow}```\n\
#### Reflection API Call Statement\n```java\n{call}\n```\n\
#### Target Class Methods ({class})\n{}\n\n\
Answer with a JSON object {{\"method\": \"<signature copied exactly from the list>\"}}.\n",
        list(methods)
    )
}

/// Feasible subset of `options`; unknown entries are ignored unless
/// nothing valid remains.
pub fn parse_feasible(response: &str, options: &[String]) -> Result<Vec<String>, AnswerError> {
    let v = last_json_object(response, |v| v.get("feasible").is_some_and(|f| f.is_array())).ok_or(AnswerError::Unparseable("feasible"))?;
    let named: Vec<&str> = v["feasible"].as_array().into_iter().flatten().filter_map(|x| x.as_str()).collect();
    if named.is_empty() {
        return Err(AnswerError::Empty);
    }
    let picked: Vec<String> = options.iter().filter(|o| named.iter().any(|n| n.trim() == o.as_str())).cloned().collect();
    if picked.is_empty() {
        return Err(AnswerError::NotInList(named.join(", ")));
    }
    Ok(picked)
}

fn pick_one(response: &str, key: &'static str, options: &[String], simple: impl Fn(&str) -> String) -> Result<String, AnswerError> {
    let v = last_json_object(response, |v| v.get(key).is_some_and(|x| x.is_string())).ok_or(AnswerError::Unparseable(key))?;
    let s = v[key].as_str().unwrap_or_default().trim().to_string();
    if s.is_empty() {
        return Err(AnswerError::Empty);
    }
    if let Some(o) = options.iter().find(|o| **o == s) {
        return Ok(o.clone());
    }
    let mut it = options.iter().filter(|o| simple(o) == simple(&s));
    match (it.next(), it.next()) {
        (Some(o), None) => Ok(o.clone()),
        _ => Err(AnswerError::NotInList(s)),
    }
}

pub fn parse_class(response: &str, classes: &[String]) -> Result<String, AnswerError> {
    pick_one(response, "class", classes, |c| c.rsplit(['.', '$']).next().unwrap_or(c).to_string())
}

/// Accepts the full signature or a bare method name when unique.
pub fn parse_method(response: &str, methods: &[String]) -> Result<String, AnswerError> {
    pick_one(response, "method", methods, |m| {
        let head = m.split('(').next().unwrap_or(m);
        head.rsplit(['.', ' ']).next().unwrap_or(head).to_string()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn feasible_subset_and_faults() {
        let o = opts(&["int A.id(int)", "int B.id(int)"]);
        assert_eq!(parse_feasible("```json\n{\"feasible\": [\"int B.id(int)\"]}\n```", &o).unwrap(), vec!["int B.id(int)"]);
        assert_eq!(parse_feasible("no idea", &o), Err(AnswerError::Unparseable("feasible")));
        assert_eq!(parse_feasible("{\"feasible\": []}", &o), Err(AnswerError::Empty));
        assert!(matches!(parse_feasible("{\"feasible\": [\"C.x\"]}", &o), Err(AnswerError::NotInList(_))));
    }

    #[test]
    fn class_and_method_matching() {
        let c = opts(&["org.x.PropertyClass", "org.x.Other"]);
        assert_eq!(parse_class("{\"class\": \"PropertyClass\"}", &c).unwrap(), "org.x.PropertyClass");
        assert!(parse_class("{\"class\": \"java.lang.String\"}", &c).is_err());
        let m = opts(&["String org.x.PropertyClass.displaySearch(String)", "String org.x.PropertyClass.display(String)"]);
        assert_eq!(parse_method("{\"method\": \"displaySearch\"}", &m).unwrap(), m[0]);
        assert_eq!(parse_method(&format!("{{\"method\": \"{}\"}}", m[1]), &m).unwrap(), m[1]);
    }

    #[test]
    fn prompts_carry_all_inputs() {
        let p = polymorphism_prompt("3| A a = new B();\n", "a.id(v);", &opts(&["int A.id(int)"]), "class B extends A");
        for part in ["Dataflow Context", "a.id(v);", "- int A.id(int)", "class B extends A", "\"feasible\""] {
            assert!(p.contains(part), "{part}");
        }
        let p = reflection_method_prompt("", "m.invoke(this)", "P", &opts(&["void P.f()"]));
        assert!(p.contains("Step 1") && p.contains("- void P.f()"));
    }
}

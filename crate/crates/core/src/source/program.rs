//! Resolved program model: classes, enums, controllers and the mapping from
//! request-model fields to parameter paths.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::ast::{ClassDecl, EnumDecl, FieldDecl, Item, MethodDecl, TypeRef, Unit};
use super::{parse_unit, SourceError};
use crate::constraint::ParamPath;

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error(transparent)]
    Parse(#[from] SourceError),
    #[error("type '{0}' is declared more than once")]
    DuplicateType(String),
    #[error("method '{class}.{method}' is overloaded; overloads are not supported")]
    Overload { class: String, method: String },
    #[error("controller '{0}' must be written as Class.method")]
    BadControllerName(String),
    #[error("controller '{0}' does not exist")]
    UnresolvedController(String),
    #[error("request model class '{0}' does not exist")]
    UnknownModel(String),
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
}

/// A request-model field reachable from a root model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelField {
    pub path: ParamPath,
    pub owner: String,
    pub field: String,
    pub ty: TypeRef,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub classes: BTreeMap<String, ClassDecl>,
    pub enums: BTreeMap<String, EnumDecl>,
    /// Source file of every type.
    pub files: BTreeMap<String, String>,
    pub request_models: BTreeSet<String>,
    pub controllers: Vec<(String, String)>,
}

/// Lowercases the first character: `Offset` -> `offset`.
fn decapitalize(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_lowercase().chain(cs).collect(),
        None => String::new(),
    }
}

impl Program {
    pub fn method(&self, class: &str, name: &str) -> Option<&MethodDecl> {
        self.classes.get(class)?.methods.iter().find(|m| m.name == name)
    }

    pub fn field(&self, class: &str, name: &str) -> Option<&FieldDecl> {
        self.classes.get(class)?.fields.iter().find(|f| f.name == name)
    }

    pub fn is_model(&self, ty: &str) -> bool {
        self.request_models.contains(ty)
    }

    /// The model class a type refers to, looking through one container level.
    pub fn model_of(&self, ty: &TypeRef) -> Option<String> {
        if self.is_model(&ty.name) {
            return Some(ty.name.clone());
        }
        ty.element().filter(|e| self.is_model(&e.name)).map(|e| e.name.clone())
    }

    /// Field read by a getter under the bean convention (`getX`, `isX`), or
    /// `None` when the class has no such field.
    pub fn getter_field(&self, class: &str, method: &str) -> Option<&FieldDecl> {
        let stem = method.strip_prefix("get").or_else(|| method.strip_prefix("is"))?;
        self.field(class, &decapitalize(stem))
    }

    /// Field written by a setter (`setX`).
    pub fn setter_field(&self, class: &str, method: &str) -> Option<&FieldDecl> {
        let stem = method.strip_prefix("set")?;
        self.field(class, &decapitalize(stem))
    }

    /// The enum declaring `constant`, if exactly one does.
    pub fn enum_of_constant(&self, constant: &str) -> Option<&str> {
        let mut owners = self.enums.values().filter(|e| e.constants.iter().any(|c| c == constant));
        let first = owners.next()?;
        owners.next().is_none().then_some(first.name.as_str())
    }

    /// The controller's request model: its first parameter of model type.
    pub fn request_root(&self, class: &str, method: &str) -> Option<(usize, String)> {
        let m = self.method(class, method)?;
        m.params.iter().enumerate().find_map(|(i, p)| self.is_model(&p.ty.name).then(|| (i, p.ty.name.clone())))
    }

    /// Every field reachable from `root`, with its parameter path.
    /// Each field occurrence maps to exactly one path; recursive model types
    /// are cut at their first repetition along a path.
    pub fn parameter_fields(&self, root: &str) -> Vec<ModelField> {
        let mut out = Vec::new();
        let mut stack = vec![root.to_string()];
        self.collect_fields(root, &ParamPath::new(""), &mut stack, &mut out);
        out
    }

    fn collect_fields(&self, class: &str, prefix: &ParamPath, stack: &mut Vec<String>, out: &mut Vec<ModelField>) {
        let Some(c) = self.classes.get(class) else { return };
        for f in c.fields.iter().filter(|f| !f.is_static) {
            let path = if prefix.as_str().is_empty() { ParamPath::new(&f.name) } else { prefix.child(&f.name) };
            out.push(ModelField { path: path.clone(), owner: class.to_string(), field: f.name.clone(), ty: f.ty.clone() });
            if let Some(model) = self.model_of(&f.ty) {
                if !stack.contains(&model) {
                    stack.push(model.clone());
                    self.collect_fields(&model, &path, stack, out);
                    stack.pop();
                }
            }
        }
    }

    /// Paths under `root` whose last segment is `name`, optionally restricted
    /// to fields declared by `owner`. Sorted by depth, then lexicographically.
    pub fn paths_named(&self, root: &str, name: &str, owner: Option<&str>) -> Vec<ParamPath> {
        let mut paths: Vec<ParamPath> = self
            .parameter_fields(root)
            .into_iter()
            .filter(|f| f.field == name && owner.is_none_or(|o| f.owner == o))
            .map(|f| f.path)
            .collect();
        paths.sort_by(|a, b| a.depth().cmp(&b.depth()).then_with(|| a.cmp(b)));
        paths
    }
}

/// Parses every file and links the declared controllers and models.
pub fn resolve_program(files: &[SourceFile], controllers: &[String], request_models: &[String]) -> Result<Program, ProgramError> {
    let mut units: Vec<(String, Unit)> = Vec::new();
    for f in files {
        let unit = parse_unit(&f.text).map_err(|e| e.in_file(&f.name))?;
        units.push((f.name.clone(), unit));
    }
    let mut p = Program {
        classes: BTreeMap::new(),
        enums: BTreeMap::new(),
        files: BTreeMap::new(),
        request_models: BTreeSet::new(),
        controllers: Vec::new(),
    };
    for (file, unit) in units {
        for item in unit.items {
            let name = match &item {
                Item::Class(c) => c.name.clone(),
                Item::Enum(e) => e.name.clone(),
            };
            if p.files.insert(name.clone(), file.clone()).is_some() {
                return Err(ProgramError::DuplicateType(name));
            }
            match item {
                Item::Class(c) => {
                    let mut seen = BTreeSet::new();
                    for m in &c.methods {
                        if !seen.insert(&m.name) {
                            return Err(ProgramError::Overload { class: c.name.clone(), method: m.name.clone() });
                        }
                    }
                    p.classes.insert(name, c);
                }
                Item::Enum(e) => {
                    p.enums.insert(name, e);
                }
            }
        }
    }
    for m in request_models {
        if !p.classes.contains_key(m) {
            return Err(ProgramError::UnknownModel(m.clone()));
        }
        p.request_models.insert(m.clone());
    }
    for c in controllers {
        let Some((class, method)) = c.rsplit_once('.') else {
            return Err(ProgramError::BadControllerName(c.clone()));
        };
        if p.method(class, method).is_none() {
            return Err(ProgramError::UnresolvedController(c.clone()));
        }
        p.controllers.push((class.to_string(), method.to_string()));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn program() -> Program {
        let files = vec![
            SourceFile {
                name: "models.mj".into(),
                text: "class PaymentRequest { Card card; int offset; String reference; List<Person> people; }
                       class Card { String cvc; String reference; Card backup; }
                       class Person { int age; }"
                    .into(),
            },
            SourceFile {
                name: "controller.mj".into(),
                text: "class Api { void pay(PaymentRequest request) { } }\nenum Kind { SCHEME, IDEAL }".into(),
            },
        ];
        resolve_program(
            &files,
            &["Api.pay".to_string()],
            &["PaymentRequest".to_string(), "Card".to_string(), "Person".to_string()],
        )
        .unwrap()
    }

    #[test]
    fn getters_map_to_fields() {
        let p = program();
        assert_eq!(p.getter_field("PaymentRequest", "getOffset").unwrap().name, "offset");
        assert!(p.getter_field("PaymentRequest", "getNothing").is_none());
        assert_eq!(p.setter_field("Card", "setCvc").unwrap().name, "cvc");
    }

    #[test]
    fn nested_and_duplicate_names() {
        let p = program();
        let paths: Vec<String> = p.parameter_fields("PaymentRequest").iter().map(|f| f.path.to_string()).collect();
        assert!(paths.contains(&"card.cvc".to_string()));
        assert!(paths.contains(&"people.age".to_string()));
        // Card.backup is cut instead of recursing forever.
        assert!(paths.contains(&"card.backup".to_string()));
        assert!(!paths.iter().any(|p| p.starts_with("card.backup.")));
        let unique: BTreeSet<_> = paths.iter().collect();
        assert_eq!(unique.len(), paths.len());
        assert_eq!(
            p.paths_named("PaymentRequest", "reference", None),
            vec![ParamPath::new("reference"), ParamPath::new("card.reference")]
        );
        assert_eq!(p.paths_named("PaymentRequest", "reference", Some("Card")), vec![ParamPath::new("card.reference")]);
        assert_eq!(p.request_root("Api", "pay"), Some((0, "PaymentRequest".to_string())));
        assert_eq!(p.enum_of_constant("IDEAL"), Some("Kind"));
    }

    #[test]
    fn resolution_errors() {
        let f = |text: &str| vec![SourceFile { name: "a.mj".into(), text: text.into() }];
        assert!(matches!(
            resolve_program(&f("class A { void m() {} }"), &["A.n".into()], &[]),
            Err(ProgramError::UnresolvedController(_))
        ));
        assert!(matches!(
            resolve_program(&f("class A { void m() {} void m(int x) {} }"), &[], &[]),
            Err(ProgramError::Overload { .. })
        ));
        let err = resolve_program(&f("class A { void m() { x -> 1; } }"), &[], &[]).unwrap_err();
        assert!(err.to_string().starts_with("a.mj:1:"), "{}", err);
    }
}

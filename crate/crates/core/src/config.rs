//! Framework configuration (`struts-config.xml`) and deployment descriptor
//! (`web.xml`) parsing, serialization, and route resolution.
//!
//! Both documents are parsed into immutable models. Every cross-reference is
//! checked at parse time, so a successfully parsed [`FrameworkConfig`] never
//! yields a dangling form-bean or action-path reference later on.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use roxmltree::{Document, Node};
use thiserror::Error;

/// Suffix that marks a path as an action (re-dispatch) rather than a view.
pub const ACTION_SUFFIX: &str = ".do";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: malformed XML: {message}")]
    MalformedXml { line: u32, message: String },
    #[error("line {line}: {message}")]
    SchemaViolation { line: u32, message: String },
    #[error("line {line}: {message}")]
    BrokenReference { line: u32, message: String },
    #[error("line {line}: duplicate action path `{path}`")]
    DuplicatePath { line: u32, path: String },
    #[error("line {line}: duplicate {what} `{name}`")]
    DuplicateName {
        line: u32,
        what: &'static str,
        name: String,
    },
}

impl ConfigError {
    /// Source line of the offending element.
    pub fn line(&self) -> Option<u32> {
        match self {
            ConfigError::MalformedXml { line, .. }
            | ConfigError::SchemaViolation { line, .. }
            | ConfigError::BrokenReference { line, .. }
            | ConfigError::DuplicatePath { line, .. }
            | ConfigError::DuplicateName { line, .. } => Some(*line),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeploymentDescriptor {
    pub welcome_files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormProperty {
    pub name: String,
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormBeanDef {
    pub name: String,
    pub type_id: String,
    pub properties: Vec<FormProperty>,
}

impl FormBeanDef {
    pub fn property_names(&self) -> impl Iterator<Item = &str> {
        self.properties.iter().map(|p| p.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forward {
    pub name: String,
    pub path: String,
}

impl Forward {
    pub fn new(name: impl Into<String>, path: impl Into<String>) -> Self {
        Forward {
            name: name.into(),
            path: path.into(),
        }
    }

    pub fn is_action(&self) -> bool {
        is_action_path(&self.path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scope {
    #[default]
    Request,
    Session,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Request => "request",
            Scope::Session => "session",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a mapping does once its form (if any) has been validated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionTarget {
    /// Invoke the executor registered under this identifier.
    Executor(String),
    /// Forward straight to a path without running an executor.
    Forward(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMapping {
    pub path: String,
    pub form_bean: Option<String>,
    pub input_page: Option<String>,
    pub scope: Scope,
    pub target: ActionTarget,
    pub local_forwards: Vec<Forward>,
}

impl ActionMapping {
    pub fn action_id(&self) -> Option<&str> {
        match &self.target {
            ActionTarget::Executor(id) => Some(id),
            ActionTarget::Forward(_) => None,
        }
    }

    pub fn direct_forward(&self) -> Option<&str> {
        match &self.target {
            ActionTarget::Forward(p) => Some(p),
            ActionTarget::Executor(_) => None,
        }
    }

    pub fn local_forward(&self, name: &str) -> Option<&Forward> {
        self.local_forwards.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameworkConfig {
    pub form_beans: Vec<FormBeanDef>,
    pub global_forwards: Vec<Forward>,
    pub action_mappings: Vec<ActionMapping>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("no action mapping for `{0}`")]
    NotFound(String),
    #[error("forward `{name}` is not declared by `{mapping}` or globally")]
    UnknownForward { mapping: String, name: String },
}

pub fn is_action_path(path: &str) -> bool {
    path.ends_with(ACTION_SUFFIX)
}

/// Strips a trailing action suffix, so `/Login.do` and `/Login` compare equal.
pub fn normalize_action_path(path: &str) -> &str {
    path.strip_suffix(ACTION_SUFFIX).unwrap_or(path)
}

/// Maps a view path to its template file name:
/// `/citizen_home.jsp` becomes `citizen_home.tpl`.
pub fn view_template_name(path: &str) -> String {
    let trimmed = path.trim_start_matches('/');
    let stem = trimmed.strip_suffix(".jsp").unwrap_or(trimmed);
    format!("{stem}.tpl")
}

impl FrameworkConfig {
    pub fn form_bean(&self, name: &str) -> Option<&FormBeanDef> {
        self.form_beans.iter().find(|b| b.name == name)
    }

    pub fn global_forward(&self, name: &str) -> Option<&Forward> {
        self.global_forwards.iter().find(|f| f.name == name)
    }

    /// Finds the mapping for a request path, accepting both `/X` and `/X.do`.
    pub fn resolve_action(&self, request_path: &str) -> Result<&ActionMapping, ResolveError> {
        let wanted = normalize_action_path(request_path);
        self.action_mappings
            .iter()
            .find(|m| normalize_action_path(&m.path) == wanted)
            .ok_or_else(|| ResolveError::NotFound(request_path.to_string()))
    }

    /// Local forwards shadow global ones.
    pub fn resolve_forward<'a>(
        &'a self,
        mapping: &'a ActionMapping,
        name: &str,
    ) -> Result<&'a Forward, ResolveError> {
        mapping
            .local_forward(name)
            .or_else(|| self.global_forward(name))
            .ok_or_else(|| ResolveError::UnknownForward {
                mapping: mapping.path.clone(),
                name: name.to_string(),
            })
    }

    /// Renders the config back into the documented XML schema.
    pub fn to_xml(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<struts-config>\n");
        out.push_str("  <form-beans>\n");
        for bean in &self.form_beans {
            let _ = write!(
                out,
                "    <form-bean name=\"{}\" type=\"{}\"",
                escape_xml(&bean.name),
                escape_xml(&bean.type_id)
            );
            if bean.properties.is_empty() {
                out.push_str("/>\n");
                continue;
            }
            out.push_str(">\n");
            for prop in &bean.properties {
                let _ = write!(
                    out,
                    "      <form-property name=\"{}\"",
                    escape_xml(&prop.name)
                );
                if let Some(default) = &prop.default {
                    let _ = write!(out, " default=\"{}\"", escape_xml(default));
                }
                out.push_str("/>\n");
            }
            out.push_str("    </form-bean>\n");
        }
        out.push_str("  </form-beans>\n  <global-forwards>\n");
        for fwd in &self.global_forwards {
            write_forward(&mut out, fwd, "    ");
        }
        out.push_str("  </global-forwards>\n  <action-mappings>\n");
        for m in &self.action_mappings {
            let _ = write!(out, "    <action path=\"{}\"", escape_xml(&m.path));
            if let Some(name) = &m.form_bean {
                let _ = write!(out, " name=\"{}\"", escape_xml(name));
            }
            if let Some(input) = &m.input_page {
                let _ = write!(out, " input=\"{}\"", escape_xml(input));
            }
            let _ = write!(out, " scope=\"{}\"", m.scope);
            match &m.target {
                ActionTarget::Executor(id) => {
                    let _ = write!(out, " type=\"{}\"", escape_xml(id));
                }
                ActionTarget::Forward(path) => {
                    let _ = write!(out, " forward=\"{}\"", escape_xml(path));
                }
            }
            if m.local_forwards.is_empty() {
                out.push_str("/>\n");
                continue;
            }
            out.push_str(">\n");
            for fwd in &m.local_forwards {
                write_forward(&mut out, fwd, "      ");
            }
            out.push_str("    </action>\n");
        }
        out.push_str("  </action-mappings>\n</struts-config>\n");
        out
    }
}

fn write_forward(out: &mut String, fwd: &Forward, indent: &str) {
    let _ = writeln!(
        out,
        "{indent}<forward name=\"{}\" path=\"{}\"/>",
        escape_xml(&fwd.name),
        escape_xml(&fwd.path)
    );
}

pub(crate) fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

fn line_of(doc: &Document<'_>, node: Node<'_, '_>) -> u32 {
    doc.text_pos_at(node.range().start).row
}

/// Element-walking helper that tracks the document for line numbers.
struct Walker<'a, 'input> {
    doc: &'a Document<'input>,
}

impl<'a, 'input> Walker<'a, 'input> {
    fn violation(&self, node: Node<'_, '_>, message: impl Into<String>) -> ConfigError {
        ConfigError::SchemaViolation {
            line: line_of(self.doc, node),
            message: message.into(),
        }
    }

    /// Element children, rejecting stray non-whitespace text.
    fn elements(&self, node: Node<'a, 'input>) -> Result<Vec<Node<'a, 'input>>, ConfigError> {
        let mut out = Vec::new();
        for child in node.children() {
            if child.is_element() {
                out.push(child);
            } else if child.is_text() && !child.text().unwrap_or("").trim().is_empty() {
                return Err(self.violation(
                    child,
                    format!("unexpected text inside <{}>", node.tag_name().name()),
                ));
            }
        }
        Ok(out)
    }

    fn check_attrs(&self, node: Node<'_, '_>, allowed: &[&str]) -> Result<(), ConfigError> {
        for attr in node.attributes() {
            if !allowed.contains(&attr.name()) {
                return Err(self.violation(
                    node,
                    format!(
                        "unknown attribute `{}` on <{}>",
                        attr.name(),
                        node.tag_name().name()
                    ),
                ));
            }
        }
        Ok(())
    }

    fn required(&self, node: Node<'_, '_>, attr: &str) -> Result<String, ConfigError> {
        match node.attribute(attr) {
            Some(v) if !v.is_empty() => Ok(v.to_string()),
            _ => Err(self.violation(
                node,
                format!(
                    "<{}> requires a non-empty `{attr}` attribute",
                    node.tag_name().name()
                ),
            )),
        }
    }

    fn expect_name(&self, node: Node<'_, '_>, name: &str) -> Result<(), ConfigError> {
        if node.tag_name().name() == name && node.tag_name().namespace().is_none() {
            Ok(())
        } else {
            Err(self.violation(
                node,
                format!(
                    "unknown element <{}> (expected <{name}>)",
                    node.tag_name().name()
                ),
            ))
        }
    }

    fn forward(&self, node: Node<'_, '_>) -> Result<Forward, ConfigError> {
        self.expect_name(node, "forward")?;
        self.check_attrs(node, &["name", "path"])?;
        if let Some(child) = self.elements(node)?.first() {
            return Err(self.violation(*child, "<forward> takes no child elements"));
        }
        Ok(Forward::new(
            self.required(node, "name")?,
            self.required(node, "path")?,
        ))
    }
}

fn parse_document(text: &str) -> Result<Document<'_>, ConfigError> {
    Document::parse(text).map_err(|e| ConfigError::MalformedXml {
        line: e.pos().row,
        message: e.to_string(),
    })
}

pub fn parse_framework_config(text: &str) -> Result<FrameworkConfig, ConfigError> {
    let doc = parse_document(text)?;
    let w = Walker { doc: &doc };
    let root = doc.root_element();
    w.expect_name(root, "struts-config")?;
    w.check_attrs(root, &[])?;

    let mut config = FrameworkConfig::default();
    let mut seen_sections = HashSet::new();
    // Source line of each mapping, for diagnostics.
    let mut mapping_lines = Vec::new();
    let mut forward_lines = Vec::new();

    for section in w.elements(root)? {
        let name = section.tag_name().name();
        if !seen_sections.insert(name.to_string()) {
            return Err(w.violation(section, format!("<{name}> appears more than once")));
        }
        match name {
            "form-beans" => {
                w.check_attrs(section, &[])?;
                for bean in w.elements(section)? {
                    w.expect_name(bean, "form-bean")?;
                    w.check_attrs(bean, &["name", "type"])?;
                    let def = FormBeanDef {
                        name: w.required(bean, "name")?,
                        type_id: w.required(bean, "type")?,
                        properties: parse_properties(&w, bean)?,
                    };
                    if config.form_bean(&def.name).is_some() {
                        return Err(ConfigError::DuplicateName {
                            line: line_of(&doc, bean),
                            what: "form bean",
                            name: def.name,
                        });
                    }
                    config.form_beans.push(def);
                }
            }
            // Accepted and ignored.
            "global-exceptions" => {}
            "global-forwards" => {
                w.check_attrs(section, &[])?;
                for node in w.elements(section)? {
                    let fwd = w.forward(node)?;
                    if config.global_forward(&fwd.name).is_some() {
                        return Err(ConfigError::DuplicateName {
                            line: line_of(&doc, node),
                            what: "global forward",
                            name: fwd.name,
                        });
                    }
                    forward_lines.push((line_of(&doc, node), fwd.path.clone()));
                    config.global_forwards.push(fwd);
                }
            }
            "action-mappings" => {
                w.check_attrs(section, &[])?;
                for node in w.elements(section)? {
                    let mapping = parse_action(&w, node)?;
                    let line = line_of(&doc, node);
                    let key = normalize_action_path(&mapping.path);
                    if config
                        .action_mappings
                        .iter()
                        .any(|m| normalize_action_path(&m.path) == key)
                    {
                        return Err(ConfigError::DuplicatePath {
                            line,
                            path: mapping.path,
                        });
                    }
                    for fwd in &mapping.local_forwards {
                        forward_lines.push((line, fwd.path.clone()));
                    }
                    if let Some(p) = mapping.direct_forward() {
                        forward_lines.push((line, p.to_string()));
                    }
                    mapping_lines.push(line);
                    config.action_mappings.push(mapping);
                }
            }
            other => {
                return Err(w.violation(section, format!("unknown element <{other}>")));
            }
        }
    }

    for (mapping, line) in config.action_mappings.iter().zip(&mapping_lines) {
        if let Some(bean) = &mapping.form_bean {
            if config.form_bean(bean).is_none() {
                return Err(ConfigError::BrokenReference {
                    line: *line,
                    message: format!(
                        "action `{}` names undeclared form bean `{bean}`",
                        mapping.path
                    ),
                });
            }
        }
    }
    for (line, path) in &forward_lines {
        if is_action_path(path) && config.resolve_action(path).is_err() {
            return Err(ConfigError::BrokenReference {
                line: *line,
                message: format!("forward path `{path}` names no declared action"),
            });
        }
    }
    Ok(config)
}

fn parse_properties(
    w: &Walker<'_, '_>,
    bean: Node<'_, '_>,
) -> Result<Vec<FormProperty>, ConfigError> {
    let mut props: Vec<FormProperty> = Vec::new();
    for node in w.elements(bean)? {
        w.expect_name(node, "form-property")?;
        w.check_attrs(node, &["name", "default"])?;
        let prop = FormProperty {
            name: w.required(node, "name")?,
            default: node.attribute("default").map(str::to_string),
        };
        if props.iter().any(|p| p.name == prop.name) {
            return Err(ConfigError::DuplicateName {
                line: line_of(w.doc, node),
                what: "form property",
                name: prop.name,
            });
        }
        props.push(prop);
    }
    Ok(props)
}

fn parse_action(w: &Walker<'_, '_>, node: Node<'_, '_>) -> Result<ActionMapping, ConfigError> {
    w.expect_name(node, "action")?;
    w.check_attrs(node, &["path", "name", "input", "scope", "type", "forward"])?;
    let path = w.required(node, "path")?;
    if !path.starts_with('/') {
        return Err(w.violation(node, format!("action path `{path}` must start with `/`")));
    }
    let scope = match node.attribute("scope") {
        None => Scope::Request,
        Some("request") => Scope::Request,
        Some("session") => Scope::Session,
        Some(other) => {
            return Err(w.violation(
                node,
                format!("scope `{other}` is not one of `request`, `session`"),
            ))
        }
    };
    let non_empty = |attr: &str| -> Result<Option<String>, ConfigError> {
        match node.attribute(attr) {
            None => Ok(None),
            Some("") => Err(w.violation(node, format!("`{attr}` attribute is empty"))),
            Some(v) => Ok(Some(v.to_string())),
        }
    };
    let target = match (non_empty("type")?, non_empty("forward")?) {
        (Some(id), None) => ActionTarget::Executor(id),
        (None, Some(path)) => ActionTarget::Forward(path),
        _ => {
            return Err(w.violation(
                node,
                format!("action `{path}` needs exactly one of `type` or `forward`"),
            ))
        }
    };
    let mut local_forwards: Vec<Forward> = Vec::new();
    for child in w.elements(node)? {
        let fwd = w.forward(child)?;
        if local_forwards.iter().any(|f| f.name == fwd.name) {
            return Err(ConfigError::DuplicateName {
                line: line_of(w.doc, child),
                what: "local forward",
                name: fwd.name,
            });
        }
        local_forwards.push(fwd);
    }
    Ok(ActionMapping {
        path,
        form_bean: non_empty("name")?,
        input_page: non_empty("input")?,
        scope,
        target,
        local_forwards,
    })
}

pub fn parse_deployment_descriptor(text: &str) -> Result<DeploymentDescriptor, ConfigError> {
    let doc = parse_document(text)?;
    let w = Walker { doc: &doc };
    let root = doc.root_element();
    w.check_attrs(root, &[])?;
    // A bare <welcome-file-list> root is accepted as well as the full <web-app>.
    let lists = match root.tag_name().name() {
        "web-app" => {
            let mut lists = Vec::new();
            for child in w.elements(root)? {
                w.expect_name(child, "welcome-file-list")?;
                lists.push(child);
            }
            lists
        }
        "welcome-file-list" => vec![root],
        other => return Err(w.violation(root, format!("unknown root element <{other}>"))),
    };
    let mut welcome_files = Vec::new();
    for list in lists {
        w.check_attrs(list, &[])?;
        for entry in w.elements(list)? {
            w.expect_name(entry, "welcome-file")?;
            w.check_attrs(entry, &[])?;
            if let Some(child) = entry.children().find(|c| c.is_element()) {
                return Err(w.violation(child, "<welcome-file> takes text only"));
            }
            let file = entry.text().unwrap_or("").trim().to_string();
            if file.is_empty() {
                return Err(w.violation(entry, "empty <welcome-file>"));
            }
            if file.starts_with('/') || file.split('/').any(|seg| seg == "..") {
                return Err(w.violation(
                    entry,
                    format!("welcome file `{file}` must be a relative path without `..`"),
                ));
            }
            welcome_files.push(file);
        }
    }
    Ok(DeploymentDescriptor { welcome_files })
}

impl DeploymentDescriptor {
    pub fn to_xml(&self) -> String {
        let mut out = String::from(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<web-app>\n  <welcome-file-list>\n",
        );
        for f in &self.welcome_files {
            let _ = writeln!(out, "    <welcome-file>{}</welcome-file>", escape_xml(f));
        }
        out.push_str("  </welcome-file-list>\n</web-app>\n");
        out
    }
}

//! Tag-based server-side templates.
//!
//! Templates are HTML with embedded tags of the form `{{tag attr="v"}}`.
//! Tags with a body (`form`, `select`, `option`) close with `{{/tag}}`;
//! the rest are void. Text outside tags is emitted byte-for-byte.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::config::ACTION_SUFFIX;
use crate::forms::{ActionErrors, FormState};
use crate::resources::MessageBundle;

const OPEN: &str = "{{";
const CLOSE: &str = "}}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagKind {
    Form,
    Text,
    Password,
    Select,
    Option,
    Submit,
    Errors,
    /// Writes an HTML-escaped session attribute.
    Write,
}

impl TagKind {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "form" => TagKind::Form,
            "text" => TagKind::Text,
            "password" => TagKind::Password,
            "select" => TagKind::Select,
            "option" => TagKind::Option,
            "submit" => TagKind::Submit,
            "errors" => TagKind::Errors,
            "write" => TagKind::Write,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            TagKind::Form => "form",
            TagKind::Text => "text",
            TagKind::Password => "password",
            TagKind::Select => "select",
            TagKind::Option => "option",
            TagKind::Submit => "submit",
            TagKind::Errors => "errors",
            TagKind::Write => "write",
        }
    }

    fn has_body(self) -> bool {
        matches!(self, TagKind::Form | TagKind::Select | TagKind::Option)
    }

    /// Tags whose output reads from the current form.
    pub fn is_bound(self) -> bool {
        matches!(self, TagKind::Text | TagKind::Password | TagKind::Select)
    }

    fn allowed_attrs(self) -> &'static [&'static str] {
        match self {
            TagKind::Form => &["action"],
            // `name` names the bean; with one form in context it is ignored.
            TagKind::Text | TagKind::Password => &["property", "name", "size"],
            TagKind::Select => &["property", "name"],
            TagKind::Option => &["value"],
            TagKind::Submit => &["value"],
            TagKind::Errors => &["property"],
            TagKind::Write => &["name"],
        }
    }

    fn required_attr(self) -> Option<&'static str> {
        match self {
            TagKind::Form => Some("action"),
            TagKind::Text | TagKind::Password | TagKind::Select => Some("property"),
            TagKind::Option => Some("value"),
            TagKind::Write => Some("name"),
            TagKind::Submit | TagKind::Errors => None,
        }
    }
}

impl fmt::Display for TagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("line {line}: unknown tag `{tag}`")]
    UnknownTag { line: u32, tag: String },
    #[error("line {line}: tag `{tag}` is never closed")]
    UnclosedTag { line: u32, tag: String },
    #[error("line {line}: malformed attribute in `{tag}`: {detail}")]
    MalformedAttribute {
        line: u32,
        tag: String,
        detail: String,
    },
    #[error("line {line}: `{tag}` requires attribute `{attr}`")]
    MissingAttribute {
        line: u32,
        tag: String,
        attr: String,
    },
    #[error("line {line}: closing `{tag}` without a matching open tag")]
    UnexpectedClose { line: u32, tag: String },
    #[error("line {line}: `{tag}` is not allowed here: {detail}")]
    MisplacedTag {
        line: u32,
        tag: String,
        detail: String,
    },
}

impl TemplateError {
    pub fn line(&self) -> u32 {
        match self {
            TemplateError::UnknownTag { line, .. }
            | TemplateError::UnclosedTag { line, .. }
            | TemplateError::MalformedAttribute { line, .. }
            | TemplateError::MissingAttribute { line, .. }
            | TemplateError::UnexpectedClose { line, .. }
            | TemplateError::MisplacedTag { line, .. } => *line,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error(
        "template `{template}`: `{tag}` tag for property `{property}` rendered without a form"
    )]
    MissingFormState {
        template: String,
        tag: TagKind,
        property: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Literal(String),
    Tag(TagNode),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagNode {
    pub kind: TagKind,
    pub attrs: BTreeMap<String, String>,
    pub children: Vec<Node>,
    pub line: u32,
}

impl TagNode {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.get(name).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    pub nodes: Vec<Node>,
}

impl Template {
    /// Depth-first iterator over all tag nodes.
    pub fn tags(&self) -> Vec<&TagNode> {
        fn walk<'a>(nodes: &'a [Node], out: &mut Vec<&'a TagNode>) {
            for n in nodes {
                if let Node::Tag(t) = n {
                    out.push(t);
                    walk(&t.children, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.nodes, &mut out);
        out
    }

    pub fn contains(&self, kind: TagKind) -> bool {
        self.tags().iter().any(|t| t.kind == kind)
    }

    /// Action path of the first form tag, as written in the template.
    pub fn form_action(&self) -> Option<&str> {
        self.tags()
            .into_iter()
            .find(|t| t.kind == TagKind::Form)
            .and_then(|t| t.attr("action"))
    }

    pub fn bound_properties(&self) -> Vec<(TagKind, &str, u32)> {
        self.tags()
            .into_iter()
            .filter(|t| t.kind.is_bound())
            .filter_map(|t| t.attr("property").map(|p| (t.kind, p, t.line)))
            .collect()
    }
}

struct Frame {
    tag: TagNode,
}

fn line_at(text: &str, offset: usize) -> u32 {
    text[..offset].bytes().filter(|b| *b == b'\n').count() as u32 + 1
}

pub fn compile_template(name: &str, text: &str) -> Result<Template, TemplateError> {
    let mut root: Vec<Node> = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut pos = 0;

    fn push(root: &mut Vec<Node>, stack: &mut [Frame], node: Node) {
        match stack.last_mut() {
            Some(frame) => frame.tag.children.push(node),
            None => root.push(node),
        }
    }

    while pos < text.len() {
        let Some(rel) = text[pos..].find(OPEN) else {
            push(
                &mut root,
                &mut stack,
                Node::Literal(text[pos..].to_string()),
            );
            break;
        };
        let start = pos + rel;
        if start > pos {
            push(
                &mut root,
                &mut stack,
                Node::Literal(text[pos..start].to_string()),
            );
        }
        let line = line_at(text, start);
        let inner_start = start + OPEN.len();
        let Some(end_rel) = text[inner_start..].find(CLOSE) else {
            let tag = text[inner_start..]
                .split_whitespace()
                .next()
                .unwrap_or("")
                .to_string();
            return Err(TemplateError::UnclosedTag { line, tag });
        };
        let inner = text[inner_start..inner_start + end_rel].trim();
        pos = inner_start + end_rel + CLOSE.len();

        if let Some(close_name) = inner.strip_prefix('/') {
            let close_name = close_name.trim();
            match stack.pop() {
                Some(frame) if frame.tag.kind.name() == close_name => {
                    push(&mut root, &mut stack, Node::Tag(frame.tag));
                }
                Some(frame) => {
                    return Err(TemplateError::UnclosedTag {
                        line: frame.tag.line,
                        tag: frame.tag.kind.name().to_string(),
                    })
                }
                None => {
                    return Err(TemplateError::UnexpectedClose {
                        line,
                        tag: close_name.to_string(),
                    })
                }
            }
            continue;
        }

        let inner = inner.strip_suffix('/').unwrap_or(inner).trim_end();
        let (tag_name, rest) = match inner.find(char::is_whitespace) {
            Some(i) => (&inner[..i], &inner[i..]),
            None => (inner, ""),
        };
        let kind = TagKind::from_name(tag_name).ok_or_else(|| TemplateError::UnknownTag {
            line,
            tag: tag_name.to_string(),
        })?;
        let attrs = parse_attrs(rest, kind, line)?;
        if let Some(req) = kind.required_attr() {
            if !attrs.contains_key(req) {
                return Err(TemplateError::MissingAttribute {
                    line,
                    tag: kind.name().into(),
                    attr: req.into(),
                });
            }
        }
        let misplaced = |detail: &str| TemplateError::MisplacedTag {
            line,
            tag: kind.name().into(),
            detail: detail.into(),
        };
        let inside = |k: TagKind| stack.iter().any(|f| f.tag.kind == k);
        let parent = stack.last().map(|f| f.tag.kind);
        if kind == TagKind::Form && inside(TagKind::Form) {
            return Err(misplaced("form tags may not nest"));
        }
        if kind == TagKind::Option && parent != Some(TagKind::Select) {
            return Err(misplaced("option must sit directly inside select"));
        }
        if parent == Some(TagKind::Option) {
            return Err(misplaced("option labels take plain text only"));
        }
        if parent == Some(TagKind::Select) && kind != TagKind::Option {
            return Err(misplaced("select may only contain options"));
        }

        let tag = TagNode {
            kind,
            attrs,
            children: Vec::new(),
            line,
        };
        if kind.has_body() {
            stack.push(Frame { tag });
        } else {
            push(&mut root, &mut stack, Node::Tag(tag));
        }
    }

    if let Some(frame) = stack.pop() {
        return Err(TemplateError::UnclosedTag {
            line: frame.tag.line,
            tag: frame.tag.kind.name().to_string(),
        });
    }
    Ok(Template {
        name: name.to_string(),
        nodes: root,
    })
}

fn parse_attrs(
    mut rest: &str,
    kind: TagKind,
    line: u32,
) -> Result<BTreeMap<String, String>, TemplateError> {
    let malformed = |detail: String| TemplateError::MalformedAttribute {
        line,
        tag: kind.name().to_string(),
        detail,
    };
    let mut attrs = BTreeMap::new();
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            return Ok(attrs);
        }
        let eq = rest.find('=').ok_or_else(|| {
            malformed(format!(
                "`{}` has no value",
                rest.split_whitespace().next().unwrap_or(rest)
            ))
        })?;
        let key = &rest[..eq];
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(malformed(format!("bad attribute name `{key}`")));
        }
        let after = &rest[eq + 1..];
        let Some(quoted) = after.strip_prefix('"') else {
            return Err(malformed(format!("value of `{key}` must be double-quoted")));
        };
        let close = quoted
            .find('"')
            .ok_or_else(|| malformed(format!("unterminated value for `{key}`")))?;
        let value = &quoted[..close];
        rest = &quoted[close + 1..];
        if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
            return Err(malformed(format!("missing space after `{key}`")));
        }
        if !kind.allowed_attrs().contains(&key) {
            return Err(malformed(format!("unknown attribute `{key}`")));
        }
        if attrs.insert(key.to_string(), value.to_string()).is_some() {
            return Err(malformed(format!("duplicate attribute `{key}`")));
        }
    }
}

/// Escapes text for use in element content and double-quoted attributes.
/// Braces are encoded too so rendered values never look like tags.
pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            '{' => out.push_str("&#123;"),
            '}' => out.push_str("&#125;"),
            c => out.push(c),
        }
    }
    out
}

pub struct RenderContext<'a> {
    pub form: Option<&'a FormState>,
    pub errors: &'a ActionErrors,
    pub bundle: &'a MessageBundle,
    pub session_attrs: &'a BTreeMap<String, String>,
}

pub fn render(template: &Template, ctx: &RenderContext<'_>) -> Result<String, RenderError> {
    let mut out = String::new();
    render_nodes(template, &template.nodes, ctx, None, &mut out)?;
    Ok(out)
}

fn render_nodes(
    template: &Template,
    nodes: &[Node],
    ctx: &RenderContext<'_>,
    selected: Option<&str>,
    out: &mut String,
) -> Result<(), RenderError> {
    for node in nodes {
        match node {
            Node::Literal(s) => out.push_str(s),
            Node::Tag(tag) => render_tag(template, tag, ctx, selected, out)?,
        }
    }
    Ok(())
}

fn bound_value<'c>(
    template: &Template,
    tag: &TagNode,
    ctx: &RenderContext<'c>,
) -> Result<(&'c FormState, String), RenderError> {
    let property = tag.attr("property").unwrap_or_default().to_string();
    match ctx.form {
        Some(form) => Ok((form, property)),
        None => Err(RenderError::MissingFormState {
            template: template.name.clone(),
            tag: tag.kind,
            property,
        }),
    }
}

fn render_tag(
    template: &Template,
    tag: &TagNode,
    ctx: &RenderContext<'_>,
    selected: Option<&str>,
    out: &mut String,
) -> Result<(), RenderError> {
    match tag.kind {
        TagKind::Form => {
            let action = tag.attr("action").unwrap_or_default();
            let action = if action.ends_with(ACTION_SUFFIX) {
                action.to_string()
            } else {
                format!("{action}{ACTION_SUFFIX}")
            };
            out.push_str(&format!(
                "<form method=\"post\" action=\"{}\">",
                escape_html(&action)
            ));
            render_nodes(template, &tag.children, ctx, None, out)?;
            out.push_str("</form>");
        }
        TagKind::Text | TagKind::Password => {
            let (form, property) = bound_value(template, tag, ctx)?;
            let (kind, value) = if tag.kind == TagKind::Text {
                ("text", escape_html(form.value(&property)))
            } else {
                ("password", String::new())
            };
            out.push_str(&format!(
                "<input type=\"{kind}\" name=\"{}\"",
                escape_html(&property)
            ));
            if let Some(size) = tag.attr("size") {
                out.push_str(&format!(" size=\"{}\"", escape_html(size)));
            }
            out.push_str(&format!(" value=\"{value}\"/>"));
        }
        TagKind::Select => {
            let (form, property) = bound_value(template, tag, ctx)?;
            out.push_str(&format!("<select name=\"{}\">", escape_html(&property)));
            render_nodes(
                template,
                &tag.children,
                ctx,
                Some(form.value(&property)),
                out,
            )?;
            out.push_str("</select>");
        }
        TagKind::Option => {
            let value = tag.attr("value").unwrap_or_default();
            out.push_str(&format!("<option value=\"{}\"", escape_html(value)));
            if selected == Some(value) {
                out.push_str(" selected");
            }
            out.push('>');
            render_nodes(template, &tag.children, ctx, None, out)?;
            out.push_str("</option>");
        }
        TagKind::Submit => {
            let value = tag.attr("value").unwrap_or("Submit");
            out.push_str(&format!(
                "<input type=\"submit\" value=\"{}\"/>",
                escape_html(value)
            ));
        }
        TagKind::Errors => {
            let only = tag.attr("property");
            for err in ctx.errors {
                if only.is_some_and(|p| p != err.property) {
                    continue;
                }
                let msg = ctx.bundle.get_message(&err.message_key);
                out.push_str(&format!(
                    "<span class=\"error\">{}</span>",
                    escape_html(&msg)
                ));
            }
        }
        TagKind::Write => {
            let name = tag.attr("name").unwrap_or_default();
            if let Some(v) = ctx.session_attrs.get(name) {
                out.push_str(&escape_html(v));
            }
        }
    }
    Ok(())
}

/// Compiled templates keyed by file name (`login.tpl`).
#[derive(Debug, Clone, Default)]
pub struct TemplateSet {
    templates: HashMap<String, Template>,
}

impl TemplateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, template: Template) {
        self.templates.insert(template.name.clone(), template);
    }

    /// Compiles and inserts `text` under `name`.
    pub fn add(&mut self, name: &str, text: &str) -> Result<(), TemplateError> {
        self.insert(compile_template(name, text)?);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Template> {
        self.templates.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.templates.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<_> = self.templates.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug)]
pub struct TemplateLoadFailure {
    pub file: String,
    pub error: TemplateLoadError,
}

#[derive(Debug, Error)]
pub enum TemplateLoadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Compile(#[from] TemplateError),
}

/// Loads every `*.tpl` in `dir`. Files that fail to read or compile are
/// reported and left out of the set.
pub fn load_templates(dir: &Path) -> std::io::Result<(TemplateSet, Vec<TemplateLoadFailure>)> {
    let mut set = TemplateSet::new();
    let mut failures = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "tpl") && p.is_file())
        .collect();
    entries.sort();
    for path in entries {
        let file = path.file_name().unwrap().to_string_lossy().into_owned();
        let loaded = std::fs::read_to_string(&path)
            .map_err(TemplateLoadError::from)
            .and_then(|text| compile_template(&file, &text).map_err(TemplateLoadError::from));
        match loaded {
            Ok(t) => set.insert(t),
            Err(error) => failures.push(TemplateLoadFailure { file, error }),
        }
    }
    Ok((set, failures))
}

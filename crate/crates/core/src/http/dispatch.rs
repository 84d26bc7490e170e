//! The request controller.
//!
//! For an action request the controller resolves the mapping, loads or
//! creates the form (per scope), populates and validates it, then either
//! re-renders the input page with errors or invokes the executor, resolves
//! the returned forward and renders the target view. Action-path forwards
//! are re-dispatched internally. Every step is recorded in a
//! [`LifecycleTrace`].

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use thiserror::Error;

use super::request::{HttpRequest, HttpResponse};
use super::session::{Session, SessionStore};
use crate::action::{ActionContext, ExecutorError, ExecutorRegistry};
use crate::config::{
    is_action_path, view_template_name, ActionMapping, ActionTarget, DeploymentDescriptor,
    FrameworkConfig, ResolveError, Scope,
};
use crate::forms::{populate, ActionErrors, FormState, ValidatorRegistry};
use crate::resources::MessageBundle;
use crate::views::{render, RenderContext, RenderError, Template, TemplateSet};

/// Longest chain of internal re-dispatches before the request is abandoned.
pub const MAX_FORWARD_DEPTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LifecycleEvent {
    Received,
    ConfigResolved,
    FormPopulated,
    Validated,
    ExecutorInvoked,
    ForwardResolved,
    ViewRendered,
    ResponseSent,
}

pub const CANONICAL_ORDER: [LifecycleEvent; 8] = [
    LifecycleEvent::Received,
    LifecycleEvent::ConfigResolved,
    LifecycleEvent::FormPopulated,
    LifecycleEvent::Validated,
    LifecycleEvent::ExecutorInvoked,
    LifecycleEvent::ForwardResolved,
    LifecycleEvent::ViewRendered,
    LifecycleEvent::ResponseSent,
];

/// Events of one internal re-dispatch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Redispatch {
    pub path: String,
    pub events: Vec<LifecycleEvent>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LifecycleTrace {
    pub events: Vec<LifecycleEvent>,
    /// Path of the mapping that handled the request, if any.
    pub mapping: Option<String>,
    /// Validation failures that sent control back to the input page.
    pub errors: ActionErrors,
    /// View path that produced the body.
    pub view: Option<String>,
    pub redispatches: Vec<Redispatch>,
    pub status: u16,
}

impl LifecycleTrace {
    pub fn contains(&self, event: LifecycleEvent) -> bool {
        self.events.contains(&event)
    }

    /// Strictly increasing in canonical order, opening with `Received` and
    /// closing with `ResponseSent`.
    pub fn is_canonical(&self) -> bool {
        self.events.first() == Some(&LifecycleEvent::Received)
            && self.events.last() == Some(&LifecycleEvent::ResponseSent)
            && self.events.windows(2).all(|w| w[0] < w[1])
    }

    fn mark(&mut self, depth: usize, event: LifecycleEvent) {
        match (depth, self.redispatches.last_mut()) {
            (0, _) | (_, None) => self.events.push(event),
            (_, Some(hop)) => hop.events.push(event),
        }
    }
}

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("no route for `{0}`")]
    NotFound(String),
    #[error("action `{mapping}`: no executor registered as `{action_id}`")]
    UnknownExecutor { mapping: String, action_id: String },
    #[error("action `{mapping}`: executor failed: {source}")]
    Executor {
        mapping: String,
        #[source]
        source: ExecutorError,
    },
    #[error(transparent)]
    Forward(#[from] ResolveError),
    #[error("action `{0}` failed validation but declares no input page")]
    NoInputPage(String),
    #[error("view template `{0}` is not loaded")]
    MissingTemplate(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("forward chain exceeded {MAX_FORWARD_DEPTH} hops at `{0}`")]
    ForwardLoop(String),
}

impl DispatchError {
    pub fn status(&self) -> u16 {
        match self {
            DispatchError::NotFound(_) => 404,
            DispatchError::ForwardLoop(_) => 508,
            _ => 500,
        }
    }
}

/// A view chosen for rendering, with the form it was reached with.
struct ViewTarget {
    path: String,
    form: Option<FormState>,
    errors: ActionErrors,
}

/// Everything needed to answer requests. Immutable after construction
/// except for the session store.
#[derive(Debug)]
pub struct App {
    pub config: FrameworkConfig,
    pub descriptor: DeploymentDescriptor,
    pub bundle: MessageBundle,
    pub templates: TemplateSet,
    pub validators: ValidatorRegistry,
    pub executors: ExecutorRegistry,
    pub sessions: SessionStore,
    /// Directory served under `/static/`.
    pub static_dir: Option<PathBuf>,
}

impl App {
    pub fn new(
        config: FrameworkConfig,
        descriptor: DeploymentDescriptor,
        bundle: MessageBundle,
        templates: TemplateSet,
        validators: ValidatorRegistry,
        executors: ExecutorRegistry,
    ) -> Self {
        App {
            config,
            descriptor,
            bundle,
            templates,
            validators,
            executors,
            sessions: SessionStore::default(),
            static_dir: None,
        }
    }

    pub fn with_sessions(mut self, sessions: SessionStore) -> Self {
        self.sessions = sessions;
        self
    }

    pub fn with_static_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.static_dir = Some(dir.into());
        self
    }

    pub fn dispatch(&self, request: &HttpRequest) -> (HttpResponse, LifecycleTrace) {
        let mut trace = LifecycleTrace::default();
        trace.events.push(LifecycleEvent::Received);
        let mut set_cookie = None;
        let mut response = match self.route(request, &request.path, &mut trace, &mut set_cookie) {
            Ok(r) => r,
            Err(err) => {
                if err.status() != 404 {
                    log::error!("{} {}: {err}", request.method.as_str(), request.path);
                }
                HttpResponse::error(err.status())
            }
        };
        if let Some(cookie) = set_cookie {
            response.headers.push(("Set-Cookie".into(), cookie));
        }
        trace.events.push(LifecycleEvent::ResponseSent);
        trace.status = response.status;
        (response, trace)
    }

    fn route(
        &self,
        request: &HttpRequest,
        path: &str,
        trace: &mut LifecycleTrace,
        set_cookie: &mut Option<String>,
    ) -> Result<HttpResponse, DispatchError> {
        if path == "/" {
            return self.welcome(request, trace, set_cookie);
        }
        if let Some(name) = path.strip_prefix("/static/") {
            return self.static_asset(name);
        }
        if let Ok(mapping) = self.config.resolve_action(path) {
            let (handle, cookie) = self.sessions.get_or_create(request);
            *set_cookie = cookie;
            let mut session = handle.lock();
            trace.mapping = Some(mapping.path.clone());
            let target = self.run_mapping(mapping, &request.params(), &mut session, trace, 0)?;
            return self.render_target(target, Some(&session), trace);
        }
        if path.ends_with(".jsp") && self.templates.contains(&view_template_name(path)) {
            let target = ViewTarget {
                path: path.to_string(),
                form: None,
                errors: ActionErrors::new(),
            };
            return match self.sessions.find(request) {
                Some(handle) => self.render_target(target, Some(&handle.lock()), trace),
                None => self.render_target(target, None, trace),
            };
        }
        Err(DispatchError::NotFound(path.to_string()))
    }

    /// Serves the first welcome file that exists.
    fn welcome(
        &self,
        request: &HttpRequest,
        trace: &mut LifecycleTrace,
        set_cookie: &mut Option<String>,
    ) -> Result<HttpResponse, DispatchError> {
        for file in &self.descriptor.welcome_files {
            let path = format!("/{file}");
            if is_action_path(file) && self.config.resolve_action(&path).is_ok() {
                return self.route(request, &path, trace, set_cookie);
            }
            if self.templates.contains(&view_template_name(file)) {
                return self.route(request, &path, trace, set_cookie);
            }
        }
        Err(DispatchError::NotFound("/".into()))
    }

    fn run_mapping(
        &self,
        mapping: &ActionMapping,
        params: &HashMap<String, String>,
        session: &mut Session,
        trace: &mut LifecycleTrace,
        depth: usize,
    ) -> Result<ViewTarget, DispatchError> {
        trace.mark(depth, LifecycleEvent::ConfigResolved);

        let form = match &mapping.form_bean {
            Some(bean) => {
                let def = self
                    .config
                    .form_bean(bean)
                    .expect("form-bean references are checked when the config is parsed");
                let form = match mapping.scope {
                    Scope::Request => populate(def, params),
                    Scope::Session => {
                        let mut form = session
                            .form(bean)
                            .cloned()
                            .unwrap_or_else(|| FormState::blank(def));
                        form.apply(params);
                        session.store_form(form.clone());
                        form
                    }
                };
                trace.mark(depth, LifecycleEvent::FormPopulated);
                Some(form)
            }
            None => None,
        };

        if let Some(form) = &form {
            let errors = self.validators.run_validator(mapping, form);
            trace.mark(depth, LifecycleEvent::Validated);
            if !errors.is_empty() {
                let input = mapping
                    .input_page
                    .clone()
                    .ok_or_else(|| DispatchError::NoInputPage(mapping.path.clone()))?;
                trace.errors = errors.clone();
                return Ok(ViewTarget {
                    path: input,
                    form: Some(form.clone()),
                    errors,
                });
            }
        }

        let next_path = match &mapping.target {
            ActionTarget::Forward(path) => {
                trace.mark(depth, LifecycleEvent::ForwardResolved);
                path.clone()
            }
            ActionTarget::Executor(id) => {
                let executor =
                    self.executors
                        .get(id)
                        .ok_or_else(|| DispatchError::UnknownExecutor {
                            mapping: mapping.path.clone(),
                            action_id: id.clone(),
                        })?;
                trace.mark(depth, LifecycleEvent::ExecutorInvoked);
                let name = executor
                    .execute(ActionContext {
                        mapping,
                        form: form.as_ref(),
                        session,
                    })
                    .map_err(|source| DispatchError::Executor {
                        mapping: mapping.path.clone(),
                        source,
                    })?;
                let forward = self.config.resolve_forward(mapping, &name)?;
                trace.mark(depth, LifecycleEvent::ForwardResolved);
                forward.path.clone()
            }
        };

        if is_action_path(&next_path) {
            if depth + 1 > MAX_FORWARD_DEPTH {
                return Err(DispatchError::ForwardLoop(next_path));
            }
            let next = self.config.resolve_action(&next_path)?;
            trace.redispatches.push(Redispatch {
                path: next_path.clone(),
                events: Vec::new(),
            });
            return self.run_mapping(next, params, session, trace, depth + 1);
        }
        Ok(ViewTarget {
            path: next_path,
            form,
            errors: ActionErrors::new(),
        })
    }

    /// The form a template's bound tags read from: the request's own form
    /// when the template posts to the same bean, else a stored session form,
    /// else a blank one. Templates without a form tag get none.
    fn form_for_template(
        &self,
        template: &Template,
        current: Option<FormState>,
        errors: ActionErrors,
        session: Option<&Session>,
    ) -> (Option<FormState>, ActionErrors) {
        let none = (None, ActionErrors::new());
        let Some(action) = template.form_action() else {
            return none;
        };
        let Ok(mapping) = self.config.resolve_action(action) else {
            return none;
        };
        let Some(bean) = mapping.form_bean.as_deref() else {
            return none;
        };
        if let Some(form) = current.filter(|f| f.bean_name == bean) {
            return (Some(form), errors);
        }
        if mapping.scope == Scope::Session {
            if let Some(form) = session.and_then(|s| s.form(bean)) {
                return (Some(form.clone()), ActionErrors::new());
            }
        }
        match self.config.form_bean(bean) {
            Some(def) => (Some(FormState::blank(def)), ActionErrors::new()),
            None => none,
        }
    }

    fn render_target(
        &self,
        target: ViewTarget,
        session: Option<&Session>,
        trace: &mut LifecycleTrace,
    ) -> Result<HttpResponse, DispatchError> {
        let name = view_template_name(&target.path);
        let template = self
            .templates
            .get(&name)
            .ok_or(DispatchError::MissingTemplate(name))?;
        let (form, errors) = self.form_for_template(template, target.form, target.errors, session);
        let no_attrs = BTreeMap::new();
        let html = render(
            template,
            &RenderContext {
                form: form.as_ref(),
                errors: &errors,
                bundle: &self.bundle,
                session_attrs: session.map(Session::attributes).unwrap_or(&no_attrs),
            },
        )?;
        trace.events.push(LifecycleEvent::ViewRendered);
        trace.view = Some(target.path);
        Ok(HttpResponse::html(200, html))
    }

    fn static_asset(&self, name: &str) -> Result<HttpResponse, DispatchError> {
        let not_found = || DispatchError::NotFound(format!("/static/{name}"));
        let dir = self.static_dir.as_ref().ok_or_else(not_found)?;
        let safe = !name.is_empty()
            && !name.starts_with('.')
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_'));
        if !safe {
            return Err(not_found());
        }
        let body = std::fs::read(dir.join(name)).map_err(|_| not_found())?;
        let content_type = match name.rsplit_once('.').map(|(_, ext)| ext) {
            Some("css") => "text/css; charset=utf-8",
            Some("html") => "text/html; charset=utf-8",
            Some("txt") => "text/plain; charset=utf-8",
            Some("png") => "image/png",
            Some("svg") => "image/svg+xml",
            _ => "application/octet-stream",
        };
        Ok(HttpResponse::new(200, content_type, body))
    }
}

//! Executors: the business-logic step that runs after a form validates and
//! names the forward to follow.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::config::ActionMapping;
use crate::forms::FormState;
use crate::http::session::Session;

pub struct ActionContext<'a> {
    pub mapping: &'a ActionMapping,
    pub form: Option<&'a FormState>,
    pub session: &'a mut Session,
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct ExecutorError {
    pub message: String,
    #[source]
    pub source: Option<Box<dyn std::error::Error + Send + Sync>>,
}

impl ExecutorError {
    pub fn new(message: impl Into<String>) -> Self {
        ExecutorError {
            message: message.into(),
            source: None,
        }
    }
}

pub trait Executor: Send + Sync {
    /// Every forward name `execute` may return.
    fn forwards(&self) -> Vec<String>;

    fn execute(&self, ctx: ActionContext<'_>) -> Result<String, ExecutorError>;
}

/// Adapts a closure into an [`Executor`].
pub struct FnExecutor<F> {
    forwards: Vec<String>,
    run: F,
}

impl<F> FnExecutor<F>
where
    F: Fn(ActionContext<'_>) -> Result<String, ExecutorError> + Send + Sync,
{
    pub fn new<S: Into<String>>(forwards: impl IntoIterator<Item = S>, run: F) -> Self {
        FnExecutor {
            forwards: forwards.into_iter().map(Into::into).collect(),
            run,
        }
    }
}

impl<F> Executor for FnExecutor<F>
where
    F: Fn(ActionContext<'_>) -> Result<String, ExecutorError> + Send + Sync,
{
    fn forwards(&self) -> Vec<String> {
        self.forwards.clone()
    }

    fn execute(&self, ctx: ActionContext<'_>) -> Result<String, ExecutorError> {
        (self.run)(ctx)
    }
}

/// Executors keyed by the `type` attribute of their action mapping.
#[derive(Clone, Default)]
pub struct ExecutorRegistry {
    by_id: HashMap<String, Arc<dyn Executor>>,
}

impl ExecutorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, action_id: impl Into<String>, executor: impl Executor + 'static) {
        self.by_id.insert(action_id.into(), Arc::new(executor));
    }

    pub fn register_shared(&mut self, action_id: impl Into<String>, executor: Arc<dyn Executor>) {
        self.by_id.insert(action_id.into(), executor);
    }

    pub fn get(&self, action_id: &str) -> Option<&dyn Executor> {
        self.by_id.get(action_id).map(|e| e.as_ref())
    }

    pub fn ids(&self) -> Vec<&str> {
        let mut ids: Vec<_> = self.by_id.keys().map(String::as_str).collect();
        ids.sort_unstable();
        ids
    }
}

impl fmt::Debug for ExecutorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExecutorRegistry")
            .field("ids", &self.ids())
            .finish()
    }
}

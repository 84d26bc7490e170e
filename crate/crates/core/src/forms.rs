//! Form population and validation.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::config::{ActionMapping, FormBeanDef};

pub const LOGIN_FORM: &str = "LoginForm";
pub const USER_NAME_REQUIRED: &str = "error.userName.required";
pub const PASSWORD_REQUIRED: &str = "error.password.required";

/// String properties of one form bean, restricted to its declared schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormState {
    pub bean_name: String,
    schema: Vec<String>,
    values: BTreeMap<String, String>,
}

impl FormState {
    /// A form with every property set to its default (or empty).
    pub fn blank(def: &FormBeanDef) -> Self {
        let mut values = BTreeMap::new();
        for p in &def.properties {
            values.insert(p.name.clone(), p.default.clone().unwrap_or_default());
        }
        FormState {
            bean_name: def.name.clone(),
            schema: def.properties.iter().map(|p| p.name.clone()).collect(),
            values,
        }
    }

    pub fn get(&self, property: &str) -> Option<&str> {
        self.values.get(property).map(String::as_str)
    }

    /// Value of a property, `""` when undeclared.
    pub fn value(&self, property: &str) -> &str {
        self.get(property).unwrap_or("")
    }

    /// Sets a declared property. Undeclared names are ignored and reported.
    pub fn set(&mut self, property: &str, value: impl Into<String>) -> bool {
        match self.values.get_mut(property) {
            Some(slot) => {
                *slot = value.into();
                true
            }
            None => false,
        }
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn values(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Overwrites declared properties that appear in `params`; others keep
    /// their current value.
    pub fn apply(&mut self, params: &HashMap<String, String>) {
        for (name, slot) in self.values.iter_mut() {
            if let Some(v) = params.get(name) {
                slot.clone_from(v);
            }
        }
    }
}

/// Builds form state from request parameters. Undeclared parameters are
/// dropped; missing ones fall back to the declared default, then `""`.
pub fn populate(def: &FormBeanDef, params: &HashMap<String, String>) -> FormState {
    let mut form = FormState::blank(def);
    form.apply(params);
    form
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionError {
    pub property: String,
    pub message_key: String,
}

/// Ordered validation failures; empty means the form passed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActionErrors {
    items: Vec<ActionError>,
}

impl ActionErrors {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, property: impl Into<String>, message_key: impl Into<String>) {
        self.items.push(ActionError {
            property: property.into(),
            message_key: message_key.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ActionError> {
        self.items.iter()
    }

    pub fn keys(&self) -> Vec<(&str, &str)> {
        self.items
            .iter()
            .map(|e| (e.property.as_str(), e.message_key.as_str()))
            .collect()
    }
}

impl<'a> IntoIterator for &'a ActionErrors {
    type Item = &'a ActionError;
    type IntoIter = std::slice::Iter<'a, ActionError>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

pub trait Validator: Send + Sync {
    fn validate(&self, form: &FormState) -> ActionErrors;

    /// Every message key this validator can emit.
    fn message_keys(&self) -> Vec<&str>;

    /// Properties the validator reads; they must be declared on the bean.
    fn required_properties(&self) -> Vec<&str>;
}

/// Emits `<property>`-keyed errors for each listed property that is empty,
/// in declaration order. Every check always runs.
pub struct RequiredFields {
    fields: Vec<(String, String)>,
}

impl RequiredFields {
    pub fn new<P: Into<String>, K: Into<String>>(fields: impl IntoIterator<Item = (P, K)>) -> Self {
        RequiredFields {
            fields: fields
                .into_iter()
                .map(|(p, k)| (p.into(), k.into()))
                .collect(),
        }
    }

    pub fn login() -> Self {
        Self::new([
            ("userName", USER_NAME_REQUIRED),
            ("password", PASSWORD_REQUIRED),
        ])
    }
}

impl Validator for RequiredFields {
    fn validate(&self, form: &FormState) -> ActionErrors {
        let mut errors = ActionErrors::new();
        for (property, key) in &self.fields {
            // Only length is checked: whitespace counts as a value.
            if form.value(property).is_empty() {
                errors.add(property.as_str(), key.as_str());
            }
        }
        errors
    }

    fn message_keys(&self) -> Vec<&str> {
        self.fields.iter().map(|(_, k)| k.as_str()).collect()
    }

    fn required_properties(&self) -> Vec<&str> {
        self.fields.iter().map(|(p, _)| p.as_str()).collect()
    }
}

pub fn validate_login(form: &FormState) -> ActionErrors {
    debug_assert_eq!(form.bean_name, LOGIN_FORM);
    RequiredFields::login().validate(form)
}

#[derive(Clone, Default)]
pub struct ValidatorRegistry {
    by_bean: HashMap<String, Arc<dyn Validator>>,
}

impl ValidatorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, bean_name: impl Into<String>, validator: impl Validator + 'static) {
        self.by_bean.insert(bean_name.into(), Arc::new(validator));
    }

    pub fn get(&self, bean_name: &str) -> Option<&dyn Validator> {
        self.by_bean.get(bean_name).map(|v| v.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &dyn Validator)> {
        self.by_bean.iter().map(|(k, v)| (k.as_str(), v.as_ref()))
    }

    /// Runs the validator registered for the mapping's form bean. Beans
    /// without one always pass.
    pub fn run_validator(&self, mapping: &ActionMapping, form: &FormState) -> ActionErrors {
        mapping
            .form_bean
            .as_deref()
            .and_then(|name| self.get(name))
            .map(|v| v.validate(form))
            .unwrap_or_default()
    }
}

impl std::fmt::Debug for ValidatorRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut names: Vec<_> = self.by_bean.keys().collect();
        names.sort();
        f.debug_struct("ValidatorRegistry")
            .field("beans", &names)
            .finish()
    }
}

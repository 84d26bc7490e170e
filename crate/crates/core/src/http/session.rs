//! Cookie-addressed server-side sessions.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, SystemTime};

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use rand::rngs::OsRng;
use rand::RngCore;

use super::request::HttpRequest;
use crate::forms::FormState;

pub const SESSION_COOKIE: &str = "RCISESSIONID";
pub const IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

pub trait Clock: Send + Sync {
    fn now(&self) -> SystemTime;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> SystemTime {
        SystemTime::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock {
    now: Mutex<SystemTime>,
}

impl ManualClock {
    pub fn new(start: SystemTime) -> Self {
        ManualClock {
            now: Mutex::new(start),
        }
    }

    pub fn advance(&self, by: Duration) {
        *self.now.lock().unwrap() += by;
    }
}

impl Default for ManualClock {
    fn default() -> Self {
        Self::new(SystemTime::UNIX_EPOCH + Duration::from_secs(1_000_000_000))
    }
}

impl Clock for ManualClock {
    fn now(&self) -> SystemTime {
        *self.now.lock().unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    created_at: SystemTime,
    attributes: BTreeMap<String, String>,
    forms: HashMap<String, FormState>,
}

impl Session {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn created_at(&self) -> SystemTime {
        self.created_at
    }

    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    pub fn set_attribute(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.attributes.insert(name.into(), value.into());
    }

    pub fn remove_attribute(&mut self, name: &str) -> Option<String> {
        self.attributes.remove(name)
    }

    pub fn attributes(&self) -> &BTreeMap<String, String> {
        &self.attributes
    }

    /// Session-scoped form state, keyed by bean name.
    pub fn form(&self, bean_name: &str) -> Option<&FormState> {
        self.forms.get(bean_name)
    }

    pub fn store_form(&mut self, form: FormState) {
        self.forms.insert(form.bean_name.clone(), form);
    }
}

/// A live session: the lock grants one request exclusive access.
#[derive(Debug)]
pub struct SessionHandle {
    id: String,
    last_access: Mutex<SystemTime>,
    data: Mutex<Session>,
}

impl SessionHandle {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn last_access(&self) -> SystemTime {
        *self.last_access.lock().unwrap()
    }

    pub fn lock(&self) -> MutexGuard<'_, Session> {
        self.data.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn touch(&self, now: SystemTime) {
        *self.last_access.lock().unwrap() = now;
    }

    fn expired(&self, now: SystemTime, timeout: Duration) -> bool {
        now.duration_since(self.last_access())
            .map(|idle| idle > timeout)
            .unwrap_or(false)
    }
}

pub struct SessionStore {
    clock: Arc<dyn Clock>,
    timeout: Duration,
    sessions: Mutex<HashMap<String, Arc<SessionHandle>>>,
}

impl std::fmt::Debug for SessionStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionStore")
            .field("timeout", &self.timeout)
            .field("live", &self.len())
            .finish()
    }
}

impl Default for SessionStore {
    fn default() -> Self {
        Self::new(Arc::new(SystemClock))
    }
}

/// 128 random bits from the OS, URL-safe base64.
fn new_session_id() -> String {
    let mut bytes = [0u8; 16];
    OsRng.fill_bytes(&mut bytes);
    URL_SAFE_NO_PAD.encode(bytes)
}

pub fn set_cookie_value(id: &str) -> String {
    format!("{SESSION_COOKIE}={id}; Path=/; HttpOnly")
}

impl SessionStore {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        SessionStore {
            clock,
            timeout: IDLE_TIMEOUT,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The live session named by the request cookie, touching it. Expired
    /// sessions are dropped and never returned.
    pub fn find(&self, request: &HttpRequest) -> Option<Arc<SessionHandle>> {
        let id = request.cookie(SESSION_COOKIE)?;
        let now = self.clock.now();
        let mut sessions = self.sessions.lock().unwrap();
        let handle = sessions.get(id)?.clone();
        if handle.expired(now, self.timeout) {
            sessions.remove(id);
            return None;
        }
        handle.touch(now);
        Some(handle)
    }

    /// Whether the request names a live session, without touching it.
    pub fn is_live(&self, request: &HttpRequest) -> bool {
        let Some(id) = request.cookie(SESSION_COOKIE) else {
            return false;
        };
        let now = self.clock.now();
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .is_some_and(|h| !h.expired(now, self.timeout))
    }

    /// Returns the request's live session, or a new one together with the
    /// `Set-Cookie` value that names it.
    pub fn get_or_create(&self, request: &HttpRequest) -> (Arc<SessionHandle>, Option<String>) {
        if let Some(handle) = self.find(request) {
            return (handle, None);
        }
        let now = self.clock.now();
        let mut sessions = self.sessions.lock().unwrap();
        let id = loop {
            let candidate = new_session_id();
            if !sessions.contains_key(&candidate) {
                break candidate;
            }
        };
        let handle = Arc::new(SessionHandle {
            id: id.clone(),
            last_access: Mutex::new(now),
            data: Mutex::new(Session {
                id: id.clone(),
                created_at: now,
                attributes: BTreeMap::new(),
                forms: HashMap::new(),
            }),
        });
        sessions.insert(id.clone(), handle.clone());
        (handle, Some(set_cookie_value(&id)))
    }

    pub fn invalidate(&self, id: &str) -> bool {
        self.sessions.lock().unwrap().remove(id).is_some()
    }

    pub fn purge_expired(&self) -> usize {
        let now = self.clock.now();
        let mut sessions = self.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, h| !h.expired(now, self.timeout));
        before - sessions.len()
    }
}

/// Extracts the session id from a `Set-Cookie` value.
pub fn session_id_from_set_cookie(value: &str) -> Option<&str> {
    value
        .split(';')
        .next()?
        .trim()
        .strip_prefix(SESSION_COOKIE)?
        .strip_prefix('=')
}

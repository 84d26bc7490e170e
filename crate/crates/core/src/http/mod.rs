//! HTTP/1.1 subset, cookie sessions, and the MVC request controller.

pub mod dispatch;
pub mod request;
pub mod server;
pub mod session;

pub use dispatch::{App, DispatchError, LifecycleEvent, LifecycleTrace, CANONICAL_ORDER};
pub use request::{parse_request, HttpRequest, HttpResponse, Method, RequestError};
pub use server::{serve, ServeError, Server, ShutdownHandle};
pub use session::{Clock, ManualClock, Session, SessionStore, SystemClock, SESSION_COOKIE};

//! An XML-configured MVC web micro-framework and the records-collection
//! demo portal built on it.

pub mod action;
pub mod check;
pub mod cli;
pub mod config;
pub mod forms;
pub mod http;
pub mod persistence;
pub mod portal;
pub mod resources;
pub mod views;

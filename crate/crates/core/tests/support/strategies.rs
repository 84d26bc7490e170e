//! Generators shared by the property tests and the acceptance suite.

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use strutskit::config::{
    ActionMapping, ActionTarget, FormBeanDef, FormProperty, Forward, FrameworkConfig, Scope,
};
use strutskit::persistence::{Table, UserRecord, EMAIL_COLUMN, PASSWORD_COLUMN};

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9_]{0,7}"
}

fn attr_text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9&<>\"' .,;:/=?é€]{0,12}"
}

fn view_path() -> impl Strategy<Value = String> {
    "/[a-z][a-z0-9_]{0,6}\\.jsp"
}

fn forwards(max: usize, action_paths: Vec<String>) -> impl Strategy<Value = Vec<Forward>> {
    let path = if action_paths.is_empty() {
        view_path().boxed()
    } else {
        prop_oneof![
            3 => view_path(),
            1 => prop::sample::select(action_paths).prop_map(|p| format!("{p}.do")),
        ]
        .boxed()
    };
    prop::collection::btree_map(ident(), path, 0..=max).prop_map(|m| {
        m.into_iter()
            .map(|(name, path)| Forward { name, path })
            .collect()
    })
}

fn form_bean() -> impl Strategy<Value = (String, String, Vec<FormProperty>)> {
    (
        "[a-z]{1,6}(\\.[A-Z][a-z]{1,6}){0,2}",
        prop::collection::btree_map(ident(), prop::option::of(attr_text()), 0..4),
    )
        .prop_map(|(type_id, props)| {
            let properties = props
                .into_iter()
                .map(|(name, default)| FormProperty { name, default })
                .collect();
            (String::new(), type_id, properties)
        })
}

/// Any structurally valid configuration: unique names, every bean
/// reference and action-path forward resolves.
pub fn framework_config() -> impl Strategy<Value = FrameworkConfig> {
    (
        prop::collection::btree_set(ident(), 0..4),
        prop::collection::btree_set("/[A-Z][A-Za-z0-9]{0,6}", 0..6),
    )
        .prop_flat_map(
            |(bean_names, paths): (BTreeSet<String>, BTreeSet<String>)| {
                let bean_names: Vec<String> = bean_names.into_iter().collect();
                let paths: Vec<String> = paths.into_iter().collect();
                let beans = prop::collection::vec(form_bean(), bean_names.len()).prop_map({
                    let names = bean_names.clone();
                    move |defs| {
                        names
                            .iter()
                            .zip(defs)
                            .map(|(name, (_, type_id, properties))| FormBeanDef {
                                name: name.clone(),
                                type_id,
                                properties,
                            })
                            .collect::<Vec<_>>()
                    }
                });
                let bean_ref = if bean_names.is_empty() {
                    Just(None).boxed()
                } else {
                    prop::option::of(prop::sample::select(bean_names)).boxed()
                };
                let target = prop_oneof![
                    "[a-z]{1,5}(\\.[A-Z][a-z]{1,5}){0,2}".prop_map(ActionTarget::Executor),
                    view_path().prop_map(ActionTarget::Forward),
                ];
                let mapping_parts = prop::collection::vec(
                    (
                        bean_ref,
                        prop::option::of(view_path()),
                        prop::bool::ANY,
                        target,
                        forwards(4, paths.clone()),
                    ),
                    paths.len(),
                );
                let mappings = mapping_parts.prop_map({
                    let paths = paths.clone();
                    move |parts| {
                        paths
                            .iter()
                            .zip(parts)
                            .map(
                                |(
                                    path,
                                    (form_bean, input_page, session, target, local_forwards),
                                )| ActionMapping {
                                    path: path.clone(),
                                    form_bean,
                                    input_page,
                                    scope: if session {
                                        Scope::Session
                                    } else {
                                        Scope::Request
                                    },
                                    target,
                                    local_forwards,
                                },
                            )
                            .collect::<Vec<_>>()
                    }
                });
                (beans, forwards(4, paths), mappings)
            },
        )
        .prop_map(
            |(form_beans, global_forwards, action_mappings)| FrameworkConfig {
                form_beans,
                global_forwards,
                action_mappings,
            },
        )
}

/// Key and value pairs the properties format can carry losslessly.
pub fn bundle_entries() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::btree_map(
        "[A-Za-z0-9_][A-Za-z0-9_.\\-]{0,15}",
        "([^\\s]([^\r\n]{0,20}[^\\s])?)?",
        0..12,
    )
    .prop_map(|m| m.into_iter().collect())
}

fn cell() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z0-9@.]{0,8}",
        "[a-zA-Z0-9 ,\"\r\n'@é]{0,12}",
        Just(String::new()),
    ]
}

/// Tables with arbitrary cell text: commas, quotes, newlines, non-ASCII.
pub fn table() -> impl Strategy<Value = Table> {
    prop::collection::btree_set("[a-z][a-z0-9_]{0,6}", 1..5).prop_flat_map(|cols| {
        let cols: Vec<String> = cols.into_iter().collect();
        let width = cols.len();
        prop::collection::vec(prop::collection::vec(cell(), width), 0..10)
            .prop_map(move |rows| Table::new("t", cols.clone(), rows).unwrap())
    })
}

/// A credential table drawn from a small alphabet so that queries hit,
/// miss and collide, plus one query.
pub fn credential_instance() -> impl Strategy<Value = (Table, String, String)> {
    let email = prop::sample::select(vec!["a@x.in", "b@x.in", "A@x.in", "c@x.in", ""]);
    let pass = prop::sample::select(vec!["p", "q", "P", "p ", ""]);
    (
        prop::collection::vec((email.clone(), pass.clone(), "[a-z]{0,3}"), 0..=20),
        prop::bool::ANY,
        email,
        pass,
    )
        .prop_map(|(rows, extra_first, e, p)| {
            let mut columns = vec![EMAIL_COLUMN.to_string(), PASSWORD_COLUMN.to_string()];
            if extra_first {
                columns.insert(0, "note".into());
            }
            let rows = rows
                .into_iter()
                .map(|(e, p, n)| {
                    let mut row = vec![e.to_string(), p.to_string()];
                    if extra_first {
                        row.insert(0, n);
                    }
                    row
                })
                .collect();
            (
                Table::new("creds", columns, rows).unwrap(),
                e.to_string(),
                p.to_string(),
            )
        })
}

/// Index of the first row per exact (email, password) pair.
pub fn find_user_oracle(table: &Table, email: &str, password: &str) -> Option<UserRecord> {
    let e = table.columns().iter().position(|c| c == EMAIL_COLUMN)?;
    let p = table.columns().iter().position(|c| c == PASSWORD_COLUMN)?;
    let mut first: HashMap<(&str, &str), usize> = HashMap::new();
    for (i, row) in table.rows().iter().enumerate().rev() {
        first.insert((row[e].as_str(), row[p].as_str()), i);
    }
    first.get(&(email, password)).map(|&i| UserRecord {
        emailid: table.rows()[i][e].clone(),
        password: table.rows()[i][p].clone(),
    })
}

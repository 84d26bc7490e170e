use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use strutskit::persistence::{load_table, save_table, Table, TableSource, TableStore};

fn table_of(n: usize) -> Table {
    let rows = (0..n)
        .map(|i| vec![format!("user{i}@x.in"), format!("p\"{i},\n")])
        .collect();
    Table::new("creds", vec!["emailid".into(), "password".into()], rows).unwrap()
}

#[test]
fn readers_never_observe_a_partial_file() {
    let dir = tempfile::tempdir().unwrap();
    save_table(dir.path(), &table_of(1)).unwrap();
    let done = Arc::new(AtomicBool::new(false));
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let path = dir.path().to_path_buf();
            let done = done.clone();
            thread::spawn(move || {
                let mut reads = 0;
                while !done.load(Ordering::SeqCst) {
                    let t = load_table(&path, "creds").expect("every snapshot loads");
                    let n = t.rows().len();
                    assert_eq!(t, table_of(n), "torn table with {n} rows");
                    reads += 1;
                }
                reads
            })
        })
        .collect();
    for n in 2..200 {
        save_table(dir.path(), &table_of(n)).unwrap();
    }
    done.store(true, Ordering::SeqCst);
    for r in readers {
        assert!(r.join().unwrap() > 0);
    }
    assert_eq!(load_table(dir.path(), "creds").unwrap(), table_of(199));
}

#[test]
fn concurrent_updates_are_serialized() {
    let dir = tempfile::tempdir().unwrap();
    save_table(dir.path(), &table_of(0)).unwrap();
    let store = Arc::new(TableStore::open(dir.path(), &["creds"]).unwrap());
    let writers: Vec<_> = (0..8)
        .map(|w| {
            let store = store.clone();
            thread::spawn(move || {
                for i in 0..25 {
                    store
                        .update("creds", |t| {
                            t.push_row(vec![format!("w{w}-{i}"), "x".into()])?;
                            Ok(true)
                        })
                        .unwrap();
                }
            })
        })
        .collect();
    for w in writers {
        w.join().unwrap();
    }
    assert_eq!(store.table("creds").unwrap().rows().len(), 200);
    assert_eq!(load_table(dir.path(), "creds").unwrap().rows().len(), 200);
}

#[test]
fn rejected_update_leaves_file_untouched() {
    let dir = tempfile::tempdir().unwrap();
    save_table(dir.path(), &table_of(3)).unwrap();
    let before = std::fs::read(dir.path().join("creds.csv")).unwrap();
    let store = TableStore::open(dir.path(), &["creds"]).unwrap();
    assert!(!store.update("creds", |_| Ok(false)).unwrap());
    assert!(store
        .update("creds", |t| t
            .push_row(vec!["only one".into()])
            .map(|_| true))
        .is_err());
    assert_eq!(std::fs::read(dir.path().join("creds.csv")).unwrap(), before);
    assert_eq!(store.table("creds").unwrap().rows().len(), 3);
}

//! HTTP backend for dual-annotator lexicon building.
//!
//! Tasks, labels and reviews are events in an append-only JSONL log; the served
//! state is rebuilt from that log at startup. Writes are serialized through one
//! lock, reads run concurrently and always see a whole number of events.

mod api;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

pub use api::{router, SharedStore};
pub use store::{
    Event, FinalBasis, ItemState, ItemView, Progress, Store, StoreError, Task, TaskItem,
};

pub fn shared(store: Store) -> SharedStore {
    Arc::new(RwLock::new(store))
}

/// Opens the log in `data_dir` and serves until the process is stopped.
pub async fn serve(
    addr: SocketAddr,
    data_dir: PathBuf,
    ui_dir: Option<PathBuf>,
) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let store = Store::open(&data_dir)?;
    log::info!(
        "replayed {} events from {}",
        store.event_count(),
        data_dir.display()
    );
    let app = router(shared(store), ui_dir);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}

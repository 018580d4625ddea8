//! HTTP front end for one simulated workcell: tree authoring, execution and a
//! replayable event stream.

pub mod engine;
pub mod error;
mod routes;

use std::time::Duration;

use tokio::sync::{mpsc, oneshot};
use tokio::time::MissedTickBehavior;

pub use engine::{Engine, EventLog, QueryDoc, RegistryDoc, RunRequest, StatusDoc, SymbolsDoc};
pub use error::{ApiError, ErrorDoc};
pub use routes::router;

#[derive(Clone, Debug)]
pub struct ServiceOptions {
    /// Wall-clock pause between tree ticks. Zero runs as fast as possible.
    pub tick_interval: Duration,
    /// Live events a subscriber may fall behind by before it is cut off.
    pub event_buffer: usize,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self {
            tick_interval: Duration::from_millis(50),
            event_buffer: 1024,
        }
    }
}

type Job = Box<dyn FnOnce(&mut Engine) + Send>;

/// Cheap handle to the executor task.
#[derive(Clone)]
pub struct Handle {
    jobs: mpsc::Sender<Job>,
    log: EventLog,
}

impl Handle {
    /// Runs `f` on the engine between ticks.
    pub async fn call<R: Send + 'static>(&self, f: impl FnOnce(&mut Engine) -> R + Send + 'static) -> R {
        let (tx, rx) = oneshot::channel();
        let job: Job = Box::new(move |engine| {
            let _ = tx.send(f(engine));
        });
        self.jobs.send(job).await.expect("executor alive");
        rx.await.expect("executor replied")
    }

    pub fn events(&self) -> &EventLog {
        &self.log
    }
}

/// Starts the executor task that owns `engine`.
pub fn spawn(engine: Engine, options: &ServiceOptions) -> Handle {
    let log = engine.events().clone();
    let (jobs, mut rx) = mpsc::channel::<Job>(64);
    let period = options.tick_interval.max(Duration::from_micros(1));
    let mut engine = engine;
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(period);
        ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
        loop {
            if engine.is_running() {
                tokio::select! {
                    job = rx.recv() => match job {
                        Some(job) => job(&mut engine),
                        None => break,
                    },
                    _ = ticker.tick() => {
                        engine.step();
                    }
                }
            } else {
                match rx.recv().await {
                    Some(job) => job(&mut engine),
                    None => break,
                }
                ticker.reset();
            }
        }
    });
    Handle { jobs, log }
}

/// Serves `router` on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, handle: Handle) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr()?, "serving");
    axum::serve(listener, router(handle)).await
}

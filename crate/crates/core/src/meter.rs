//! Elementary-operation counter with cooperative yielding.
//!
//! Long computations are written as `async fn`s that call [`Meter::tick`]
//! between chunks of work. Run under [`block_on`] with an unlimited meter they
//! complete in one poll; under a [`Task`] with a finite per-step budget they
//! suspend once the budget is spent and resume on the next step.

use std::cell::Cell;
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

#[derive(Debug, Default)]
struct Inner {
    total: Cell<u64>,
    /// remaining ops in the current step; `None` means unlimited
    remaining: Cell<Option<u64>>,
}

/// Shared op counter. Clones observe the same counts.
#[derive(Debug, Clone, Default)]
pub struct Meter(Rc<Inner>);

impl Meter {
    pub fn unlimited() -> Self {
        Meter::default()
    }

    pub fn with_budget(budget: u64) -> Self {
        let m = Meter::default();
        m.0.remaining.set(Some(budget));
        m
    }

    /// Charge `ops` elementary operations.
    pub fn add(&self, ops: u64) {
        self.0.total.set(self.0.total.get() + ops);
        if let Some(r) = self.0.remaining.get() {
            self.0.remaining.set(Some(r.saturating_sub(ops)));
        }
    }

    pub fn total(&self) -> u64 {
        self.0.total.get()
    }

    pub fn set_budget(&self, budget: Option<u64>) {
        self.0.remaining.set(budget);
    }

    pub fn exhausted(&self) -> bool {
        self.0.remaining.get() == Some(0)
    }

    /// Suspension point: pending while the step budget is spent.
    pub fn tick(&self) -> Tick<'_> {
        Tick(self)
    }
}

pub struct Tick<'a>(&'a Meter);

impl Future for Tick<'_> {
    type Output = ();

    fn poll(self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<()> {
        if self.0.exhausted() {
            Poll::Pending
        } else {
            Poll::Ready(())
        }
    }
}

/// Drive a future that never suspends. Panics if it does, which means a
/// finite budget was attached to a meter used on a synchronous path.
pub fn block_on<F: Future>(fut: F) -> F::Output {
    let mut fut = std::pin::pin!(fut);
    let mut cx = Context::from_waker(Waker::noop());
    match fut.as_mut().poll(&mut cx) {
        Poll::Ready(v) => v,
        Poll::Pending => panic!("synchronous computation suspended on a budgeted meter"),
    }
}

/// A resumable computation advanced in budgeted steps.
pub struct Task<T> {
    fut: Option<Pin<Box<dyn Future<Output = T>>>>,
    meter: Meter,
    output: Option<T>,
}

impl<T> Task<T> {
    pub fn new(meter: Meter, fut: impl Future<Output = T> + 'static) -> Self {
        Task {
            fut: Some(Box::pin(fut)),
            meter,
            output: None,
        }
    }

    pub fn meter(&self) -> &Meter {
        &self.meter
    }

    /// Run until the future completes, suspends, or spends `budget` ops
    /// (`None` for no limit). Returns the ops consumed by this step.
    pub fn step(&mut self, budget: Option<u64>) -> u64 {
        let before = self.meter.total();
        if let Some(fut) = self.fut.as_mut() {
            self.meter.set_budget(budget);
            let mut cx = Context::from_waker(Waker::noop());
            if let Poll::Ready(v) = fut.as_mut().poll(&mut cx) {
                self.output = Some(v);
                self.fut = None;
            }
            self.meter.set_budget(None);
        }
        self.meter.total() - before
    }

    pub fn is_done(&self) -> bool {
        self.fut.is_none()
    }

    pub fn take_output(&mut self) -> Option<T> {
        self.output.take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    async fn count_to(m: Meter, n: u64) -> u64 {
        let mut acc = 0;
        for i in 0..n {
            m.add(1);
            acc += i;
            m.tick().await;
        }
        acc
    }

    #[test]
    fn block_on_runs_to_completion() {
        let m = Meter::unlimited();
        assert_eq!(block_on(count_to(m.clone(), 10)), 45);
        assert_eq!(m.total(), 10);
    }

    #[test]
    fn task_resumes_across_steps() {
        let m = Meter::unlimited();
        let mut t = Task::new(m.clone(), count_to(m, 10));
        let mut steps = 0;
        while !t.is_done() {
            assert!(t.step(Some(3)) <= 3);
            steps += 1;
        }
        assert_eq!(steps, 4);
        assert_eq!(t.take_output(), Some(45));
    }

    #[test]
    fn inner_inbox_wait_is_pending_without_budget_use() {
        use std::cell::RefCell;
        let inbox: Rc<RefCell<Option<u64>>> = Rc::default();
        let m = Meter::unlimited();
        let rx = inbox.clone();
        let mut t = Task::new(m, async move {
            std::future::poll_fn(|_| match rx.borrow_mut().take() {
                Some(v) => Poll::Ready(v),
                None => Poll::Pending,
            })
            .await
        });
        assert_eq!(t.step(None), 0);
        assert!(!t.is_done());
        *inbox.borrow_mut() = Some(7);
        t.step(None);
        assert_eq!(t.take_output(), Some(7));
    }
}

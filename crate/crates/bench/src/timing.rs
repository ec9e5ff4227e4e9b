//! Clock helpers for the benchmark reports.

use std::time::Instant;

/// CPU time consumed by the calling thread, in milliseconds. Distinct from
/// wall time when the thread is descheduled; solver runs are single-threaded
/// so this is the run's own compute cost.
pub fn thread_cpu_millis() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime(CLOCK_THREAD_CPUTIME_ID) failed");
    ts.tv_sec as f64 * 1e3 + ts.tv_nsec as f64 / 1e6
}

/// Wall and thread-CPU duration of `f`, in milliseconds, plus its result.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64, f64) {
    let wall = Instant::now();
    let cpu0 = thread_cpu_millis();
    let out = f();
    let cpu = thread_cpu_millis() - cpu0;
    (out, wall.elapsed().as_secs_f64() * 1e3, cpu)
}

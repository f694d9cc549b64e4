fn main() {
    // Die by the default SIGPIPE like other line-oriented tools instead of
    // panicking when a downstream consumer closes the pipe early.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(gf2g::cli::dispatch_env())
}

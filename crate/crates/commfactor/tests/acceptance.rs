// Acceptance suite: filled in once the library is complete.

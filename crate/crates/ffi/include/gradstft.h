#ifndef GRADSTFT_H
#define GRADSTFT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// How an optimisation run ended.
typedef enum GsFailure {
  GS_FAILURE_NONE = 0,
  GS_FAILURE_SIGMA_FLOOR = 1,
  GS_FAILURE_SIGMA_CEILING = 2,
  GS_FAILURE_NON_FINITE = 3,
  GS_FAILURE_LAYOUT_COLLAPSED = 4,
} GsFailure;

// Spectrogram file format.
typedef enum GsFormat {
  GS_FORMAT_CSV = 0,
  GS_FORMAT_PGM = 1,
} GsFormat;

// Result of every fallible call.
typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_ARGUMENT = 2,
  GS_STATUS_DEGENERATE = 3,
  GS_STATUS_NUMERIC = 4,
  GS_STATUS_IO = 5,
  GS_STATUS_WAV = 6,
  GS_STATUS_CSV = 7,
  GS_STATUS_BUFFER_TOO_SMALL = 8,
  GS_STATUS_PANIC = 9,
} GsStatus;

// Opaque window layout handle.
typedef struct GsLayout GsLayout;

// Opaque signal handle.
typedef struct GsSignal GsSignal;

// Opaque spectrogram handle.
typedef struct GsSpectrogram GsSpectrogram;

// Outcome of `gs_optimize_sigma`.
typedef struct GsSigmaFit {
  double sigma;
  // Effective window length `floor(6 sigma)`.
  size_t length;
  double objective;
  size_t iterations;
  bool converged;
  enum GsFailure failure;
} GsSigmaFit;

// One trapezoid: zero before `rise`, ramps to one at `flat`, one until
// `fall`, zero from `end`.
typedef struct GsWindow {
  int64_t index;
  double rise;
  double flat;
  double fall;
  double end;
} GsWindow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *gs_last_error(void);

// Copies `len` samples into a new signal.
//
// # Safety
// `samples` must point to `len` readable doubles; `out` must be writable.
enum GsStatus gs_signal_new(const double *samples,
                            size_t len,
                            double sample_rate,
                            struct GsSignal **out);

// Loads a mono or multichannel PCM16 WAV file, averaged to mono.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum GsStatus gs_signal_load_wav(const char *path, struct GsSignal **out);

// Number of samples, or 0 for NULL.
//
// # Safety
// `signal` must be NULL or a live handle.
size_t gs_signal_len(const struct GsSignal *signal);

// # Safety
// `signal` must be NULL or a handle not yet freed.
void gs_signal_free(struct GsSignal *signal);

// Gaussian-window STFT with window length `floor(6 sigma)` and half-window hop.
//
// # Safety
// `signal` must be a live handle; `out` must be writable.
enum GsStatus gs_stft(const struct GsSignal *signal, double sigma, struct GsSpectrogram **out);

// Number of frames, or 0 for NULL.
//
// # Safety
// `spec` must be NULL or a live handle.
size_t gs_spectrogram_frames(const struct GsSpectrogram *spec);

// Bin count of `frame`, or 0 when out of range.
//
// # Safety
// `spec` must be NULL or a live handle.
size_t gs_spectrogram_bins(const struct GsSpectrogram *spec, size_t frame);

// Writes the magnitudes of `frame` into `out`, which holds `capacity`
// doubles.
//
// # Safety
// `spec` must be a live handle; `out` must hold `capacity` doubles.
enum GsStatus gs_spectrogram_magnitudes(const struct GsSpectrogram *spec,
                                        size_t frame,
                                        double *out,
                                        size_t capacity);

// Writes the spectrogram to `path`, replacing it atomically.
//
// # Safety
// `spec` must be a live handle; `path` a NUL-terminated string.
enum GsStatus gs_spectrogram_write(const struct GsSpectrogram *spec,
                                   const char *path,
                                   enum GsFormat format);

// # Safety
// `spec` must be NULL or a handle not yet freed.
void gs_spectrogram_free(struct GsSpectrogram *spec);

// Global sparsity of the Gaussian STFT at `sigma`.
//
// # Safety
// `signal` must be a live handle; `out` must be writable.
enum GsStatus gs_sparsity(const struct GsSignal *signal, double sigma, double *out);

// Gradient ascent of the global sparsity in sigma from `sigma0`.
//
// # Safety
// `signal` must be a live handle; `out` must be writable.
enum GsStatus gs_optimize_sigma(const struct GsSignal *signal,
                                double sigma0,
                                double learning_rate,
                                size_t max_iters,
                                struct GsSigmaFit *out);

// Learns a trapezoid window layout with the default settings, overriding
// the iteration count, learning rate and seed.
//
// # Safety
// `signal` must be a live handle; `out` must be writable.
enum GsStatus gs_train_adaptive(const struct GsSignal *signal,
                                size_t iterations,
                                double learning_rate,
                                uint64_t seed,
                                struct GsLayout **out);

// Number of windows, or 0 for NULL.
//
// # Safety
// `layout` must be NULL or a live handle.
size_t gs_layout_len(const struct GsLayout *layout);

// # Safety
// `layout` must be a live handle; `out` must be writable.
enum GsStatus gs_layout_window(const struct GsLayout *layout, size_t k, struct GsWindow *out);

// Writes the layout CSV (`i,x_i,y_i,length,center`) to `path`.
//
// # Safety
// `layout` must be a live handle; `path` a NUL-terminated string.
enum GsStatus gs_layout_write_csv(const struct GsLayout *layout, const char *path);

// # Safety
// `layout` must be NULL or a handle not yet freed.
void gs_layout_free(struct GsLayout *layout);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRADSTFT_H */

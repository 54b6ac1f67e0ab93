#ifndef BREATHFLOW_H
#define BREATHFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum BfLandmark {
  BF_LANDMARK_EYE_LEFT = 0,
  BF_LANDMARK_EYE_RIGHT = 1,
  BF_LANDMARK_NOSE = 2,
  BF_LANDMARK_CHIN = 3,
  BF_LANDMARK_SHOULDER_LEFT = 4,
  BF_LANDMARK_SHOULDER_RIGHT = 5,
  BF_LANDMARK_NECK = 6,
} BfLandmark;

// Which points drive the breathing signal.
typedef enum BfPointKind {
  BF_POINT_KIND_FACE_POINTS = 0,
  BF_POINT_KIND_CHEST_POINTS = 1,
  BF_POINT_KIND_CHEST_GRID = 2,
} BfPointKind;

typedef enum BfSignalMode {
  BF_SIGNAL_MODE_DISPLACEMENT = 0,
  BF_SIGNAL_MODE_DIFFERENCE = 1,
} BfSignalMode;

// Result code of every fallible call.
typedef enum BfStatus {
  BF_STATUS_OK = 0,
  BF_STATUS_NULL_POINTER = 1,
  BF_STATUS_INVALID_ARGUMENT = 2,
  BF_STATUS_IO = 3,
  // Malformed video, image or keypoint data.
  BF_STATUS_FORMAT = 4,
  BF_STATUS_INSUFFICIENT_INPUT = 5,
  // Selected points fall outside the trackable area.
  BF_STATUS_OUT_OF_BOUNDS = 6,
  BF_STATUS_ALL_POINTS_LOST = 7,
  // Filtering, peak detection or rate computation failed.
  BF_STATUS_SIGNAL = 8,
  BF_STATUS_PANIC = 9,
} BfStatus;

typedef enum BfTexture {
  BF_TEXTURE_CHECKER = 0,
  BF_TEXTURE_SINUSOID = 1,
  BF_TEXTURE_NOISE = 2,
  BF_TEXTURE_FLAT = 3,
} BfTexture;

// Named body landmarks in pixel coordinates.
typedef struct BfKeypoints BfKeypoints;

// Outcome of one estimate.
typedef struct BfReport BfReport;

// Grayscale frames at a fixed frame rate.
typedef struct BfSequence BfSequence;

// Per-point trajectories.
typedef struct BfTracks BfTracks;

// Pipeline parameters. Obtain defaults from [`bf_config_default`].
typedef struct BfConfig {
  size_t window_half_width;
  size_t pyramid_levels;
  size_t max_iterations;
  double convergence_epsilon;
  double min_eigenvalue;
  double low_cut_hz;
  double high_cut_hz;
  size_t filter_order;
  double prominence_factor;
  double min_peak_separation_s;
  size_t grid_rows;
  double grid_apex_scale;
  // A [`BfSignalMode`] value.
  int32_t signal_mode;
} BfConfig;

// Synthetic scene parameters. Obtain defaults from [`bf_scene_default`].
typedef struct BfSceneParams {
  size_t width;
  size_t height;
  double fps;
  double duration_s;
  double bpm;
  // Peak chest displacement in pixels.
  double amplitude_px;
  // A [`BfTexture`] value.
  int32_t texture;
  // Texture period, or cell size for noise, in pixels.
  double texture_period;
  double contrast;
  double head_noise_px;
  uint64_t seed;
} BfSceneParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none failed.
// The pointer stays valid until the next failing call on the same thread.
const char *bf_last_error(void);

// Library version as a static NUL-terminated string.
const char *bf_version(void);

struct BfConfig bf_config_default(void);

struct BfSceneParams bf_scene_default(void);

// Creates an empty sequence of `width` x `height` frames at `fps`.
//
// # Safety
// `out` must be a valid pointer to write the handle to.
enum BfStatus bf_sequence_new(size_t width, size_t height, double fps, struct BfSequence **out);

// Appends one 8-bit grayscale frame of `width * height` bytes in row order.
//
// # Safety
// `seq` must be a live handle and `pixels` must point to `len` readable bytes.
enum BfStatus bf_sequence_push_gray8(struct BfSequence *seq, const uint8_t *pixels, size_t len);

// Loads a Y4M file or a directory of PGM/PNG frames. `pattern` filters
// directory entries and may be null for all files; `fps <= 0` keeps the
// file's rate (30 for directories).
//
// # Safety
// `path` must be a NUL-terminated string, `pattern` null or NUL-terminated,
// and `out` a valid pointer.
enum BfStatus bf_sequence_open(const char *path,
                               const char *pattern,
                               double fps,
                               struct BfSequence **out);

// Number of frames, or 0 for a null handle.
//
// # Safety
// `seq` must be null or a live handle.
size_t bf_sequence_len(const struct BfSequence *seq);

// # Safety
// `seq` must be null or a handle not yet freed.
void bf_sequence_free(struct BfSequence *seq);

// Renders a synthetic breathing scene. The true rate is written to
// `truth_bpm` when it is not null.
//
// # Safety
// `params` must be readable; `out_seq` and `out_keypoints` must be valid
// pointers; `truth_bpm` may be null.
enum BfStatus bf_synth_render(const struct BfSceneParams *params,
                              struct BfSequence **out_seq,
                              struct BfKeypoints **out_keypoints,
                              double *truth_bpm);

// Creates an empty landmark set.
//
// # Safety
// `out` must be a valid pointer.
enum BfStatus bf_keypoints_new(struct BfKeypoints **out);

// Parses a landmark JSON document.
//
// # Safety
// `json` must be NUL-terminated and `out` a valid pointer.
enum BfStatus bf_keypoints_parse(const char *json, struct BfKeypoints **out);

// Sets or replaces one landmark.
//
// # Safety
// `keypoints` must be a live handle.
enum BfStatus bf_keypoints_set(struct BfKeypoints *keypoints, int32_t landmark, double x, double y);

// Reads one landmark; returns [`BfStatus::Format`] when it is absent.
//
// # Safety
// `keypoints` must be a live handle and `x`, `y` valid pointers.
enum BfStatus bf_keypoints_get(const struct BfKeypoints *keypoints,
                               int32_t landmark,
                               double *x,
                               double *y);

// # Safety
// `keypoints` must be null or a handle not yet freed.
void bf_keypoints_free(struct BfKeypoints *keypoints);

// Estimates the breathing rate. `kind` is a [`BfPointKind`] value and
// `config` may be null for defaults.
//
// # Safety
// `seq` and `keypoints` must be live handles, `config` null or readable,
// and `out` a valid pointer.
enum BfStatus bf_estimate(const struct BfSequence *seq,
                          const struct BfKeypoints *keypoints,
                          int32_t kind,
                          const struct BfConfig *config,
                          struct BfReport **out);

// Estimated rate in breaths per minute; NaN for a null handle.
//
// # Safety
// `report` must be null or a live handle.
double bf_report_bpm(const struct BfReport *report);

// Copies up to `capacity` peak sample indices into `indices` and returns
// the total number of peaks. Pass a null buffer to query the count.
//
// # Safety
// `report` must be null or a live handle; `indices` must be null or point
// to `capacity` writable elements.
size_t bf_report_peaks(const struct BfReport *report, size_t *indices, size_t capacity);

// Points that survived tracking; 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t bf_report_points_used(const struct BfReport *report);

// The full report as JSON, owned by the handle.
//
// # Safety
// `report` must be null or a live handle.
const char *bf_report_json(const struct BfReport *report);

// # Safety
// `report` must be null or a handle not yet freed.
void bf_report_free(struct BfReport *report);

// Tracks the points selected by `kind` through the whole sequence.
//
// # Safety
// `seq` and `keypoints` must be live handles, `config` null or readable,
// and `out` a valid pointer.
enum BfStatus bf_track(const struct BfSequence *seq,
                       const struct BfKeypoints *keypoints,
                       int32_t kind,
                       const struct BfConfig *config,
                       struct BfTracks **out);

// # Safety
// `tracks` must be null or a live handle.
size_t bf_tracks_points(const struct BfTracks *tracks);

// # Safety
// `tracks` must be null or a live handle.
size_t bf_tracks_frames(const struct BfTracks *tracks);

// Position of `point` at `frame`; `tracked` receives 1 while the point is
// tracked and 0 once it is lost. `tracked` may be null.
//
// # Safety
// `tracks` must be a live handle, `x` and `y` valid pointers, and
// `tracked` null or valid.
enum BfStatus bf_tracks_position(const struct BfTracks *tracks,
                                 size_t point,
                                 size_t frame,
                                 double *x,
                                 double *y,
                                 int32_t *tracked);

// # Safety
// `tracks` must be null or a handle not yet freed.
void bf_tracks_free(struct BfTracks *tracks);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BREATHFLOW_H */

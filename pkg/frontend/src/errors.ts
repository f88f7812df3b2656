export class BridgeError extends Error {}

/** A mosaic patch id has no tile on disk. */
export class MissingTile extends BridgeError {}

/** The requested backbone is unknown or cannot be constructed. */
export class ModelLoadError extends BridgeError {}

/** Malformed input (tile layout, mosaic JSON, flags). */
export class InputError extends BridgeError {}

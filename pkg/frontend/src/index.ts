export * from "./types";
export * from "./api";
export * from "./model";
export * from "./socket";
export * from "./render";

import { ApiClient } from "./api.js";
import { buildApp } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app root element");
}
// Served at /ui, API at the site root.
buildApp(root, new ApiClient(""));

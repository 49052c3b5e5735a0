import { ApiClient, apiBase } from "./api.js";
import { createApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const app = createApp(root, new ApiClient(apiBase()));
void app.loadCatalogs();

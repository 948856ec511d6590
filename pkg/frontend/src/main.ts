import { ReviewApi } from "./api.js";
import { ReviewApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
void new ReviewApp(root, new ReviewApi("")).start();

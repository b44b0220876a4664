import { mount } from "./app";

window.addEventListener("DOMContentLoaded", () => {
  mount(document.body);
});

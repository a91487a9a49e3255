// Deployment-time configuration. An empty string means the dashboard
// talks to the origin it was served from; point it elsewhere when the
// API lives on another host or port.
window.FEDPLANE_API_URL = "";

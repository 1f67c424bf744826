use serde_json::{json, Value};

fn error_ref() -> Value {
    json!({ "content": { "application/json": { "schema": { "$ref": "#/components/schemas/Error" } } } })
}

fn model_ref() -> Value {
    json!({ "content": { "application/json": { "schema": { "$ref": "#/components/schemas/ModelResponse" } } } })
}

fn id_param() -> Value {
    json!({ "name": "id", "in": "path", "required": true, "schema": { "type": "string" } })
}

fn key_param() -> Value {
    json!({
        "name": "x-api-key", "in": "header", "required": false,
        "description": "Provider key for this request only; never stored.",
        "schema": { "type": "string" }
    })
}

pub fn document() -> Value {
    json!({
        "openapi": "3.0.3",
        "info": { "title": "powlgen studio", "version": env!("CARGO_PKG_VERSION") },
        "paths": {
            "/sessions": {
                "post": {
                    "summary": "Generate a model from a description",
                    "parameters": [key_param()],
                    "requestBody": { "required": true, "content": { "application/json": { "schema": {
                        "type": "object", "required": ["description"],
                        "properties": {
                            "description": { "type": "string" },
                            "provider": { "type": "string", "enum": ["openai", "anthropic", "gemini", "mock"] },
                            "model_name": { "type": "string" }
                        }
                    } } } },
                    "responses": {
                        "200": model_ref(),
                        "400": error_ref(),
                        "409": error_ref(),
                        "422": error_ref(),
                        "502": error_ref()
                    }
                }
            },
            "/sessions/{id}": {
                "get": {
                    "summary": "Session history: versions, iteration timeline, conversation",
                    "parameters": [id_param()],
                    "responses": { "200": { "content": { "application/json": {} } }, "404": error_ref() }
                }
            },
            "/sessions/{id}/feedback": {
                "post": {
                    "summary": "Regenerate the current model with user feedback",
                    "parameters": [id_param(), key_param()],
                    "requestBody": { "required": true, "content": { "application/json": { "schema": {
                        "type": "object", "required": ["text"], "properties": { "text": { "type": "string" } }
                    } } } },
                    "responses": {
                        "200": model_ref(),
                        "404": error_ref(),
                        "409": error_ref(),
                        "422": error_ref(),
                        "502": error_ref()
                    }
                }
            },
            "/sessions/{id}/optimize": {
                "post": {
                    "summary": "Ask the provider to improve its current model",
                    "parameters": [id_param(), key_param()],
                    "responses": { "200": model_ref(), "404": error_ref(), "409": error_ref(), "502": error_ref() }
                }
            },
            "/sessions/{id}/export": {
                "get": {
                    "summary": "Download a model version",
                    "parameters": [
                        id_param(),
                        { "name": "format", "in": "query", "required": true,
                          "schema": { "type": "string", "enum": ["bpmn", "pnml", "script", "dot"] } },
                        { "name": "version", "in": "query", "required": false,
                          "schema": { "type": "integer", "minimum": 1 } }
                    ],
                    "responses": {
                        "200": { "content": {
                            "application/xml": {}, "text/x-python": {}, "text/vnd.graphviz": {}
                        } },
                        "400": error_ref(),
                        "404": error_ref()
                    }
                }
            },
            "/spec": { "get": { "summary": "This document", "responses": { "200": {} } } }
        },
        "components": { "schemas": {
            "Error": { "type": "object", "properties": {
                "error": { "type": "string" },
                "session_id": { "type": "string" },
                "diagnostics": { "type": "array", "items": { "$ref": "#/components/schemas/Diagnostic" } }
            } },
            "Diagnostic": { "type": "object", "properties": {
                "code": { "type": "string" },
                "severity": { "type": "string" },
                "message": { "type": "string" },
                "path": { "type": "string" }
            } },
            "ModelResponse": { "type": "object", "properties": {
                "session_id": { "type": "string" },
                "version": { "type": "integer" },
                "status": { "type": "string" },
                "iterations": { "type": "integer" },
                "diagnostics": { "type": "array", "items": { "$ref": "#/components/schemas/Diagnostic" } },
                "model": { "type": "object", "properties": {
                    "tree": { "type": "object" },
                    "graph": { "type": "object" },
                    "script": { "type": "string" }
                } }
            } }
        } }
    })
}
